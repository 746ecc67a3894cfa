#include <iostream>
#include <string>
#include <vector>

#include "pdc/cli/run.hpp"

int main(int argc, char** argv)
{
    const std::vector<std::string> args(argv + 1, argv + argc);
    return pdc::cli::run(args, std::cout, std::cerr);
}
