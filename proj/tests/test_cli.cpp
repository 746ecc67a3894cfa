#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pdc/cli/run.hpp"

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace pdc::cli;
namespace fs = std::filesystem;

namespace {

const fs::path scenarios = PDC_SCENARIO_DIR;

struct Outcome {
    int status;
    std::string out, err;
};

Outcome invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int status = run(args, out, err);
    return {status, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "pdcsim_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text)
{
    const fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

CsvData parse_output(const std::string& text)
{
    const fs::path p = write_file("parsed.csv", text);
    return read_csv(p, "out");
}

// Named numeric column of a CSV whose first column may hold labels.
std::vector<double> labelled_column(const std::string& text, const std::string& name)
{
    std::istringstream in(text);
    std::string line, cell;
    std::getline(in, line);
    std::istringstream head(line);
    std::size_t index = 0;
    for (std::size_t k = 0; std::getline(head, cell, ','); ++k)
        if (cell == name)
            index = k;
    std::vector<double> values;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        for (std::size_t k = 0; std::getline(row, cell, ','); ++k)
            if (k == index)
                values.push_back(std::stod(cell));
    }
    return values;
}

Outcome run_config(const std::string& command, const std::string& text)
{
    return invoke({command, "--config", write_file(command + ".conf", text).string()});
}

} // namespace

TEST_CASE("scenario parsing and units")
{
    const Scenario sc = Scenario::parse("# comment\n"
                                        "pump_fwhm = 2.5 nm   # trailing\n"
                                        "theta = 54.7 deg\n"
                                        "lengths = 1, 2, 3 mm\n"
                                        "mixed = 1 mm, 2000 um\n"
                                        "p1 = 5.065 %\n"
                                        "tau = 1.5 ps\n"
                                        "kappa = 0.3 ps/mm\n"
                                        "wide = inf nm\n"
                                        "flag = yes\n");
    CHECK_THAT(sc.get("pump_fwhm", Dimension::length), WithinRel(2.5e-9, 1e-15));
    CHECK_THAT(sc.get("theta", Dimension::angle), WithinRel(54.7 * M_PI / 180.0, 1e-15));
    const auto l = sc.list("lengths", Dimension::length);
    REQUIRE(l.size() == 3);
    CHECK_THAT(l[0], WithinRel(1e-3, 1e-15));
    CHECK_THAT(l[2], WithinRel(3e-3, 1e-15));
    const auto m = sc.list("mixed", Dimension::length);
    CHECK_THAT(m[1], WithinRel(2e-3, 1e-15));
    CHECK_THAT(sc.get("p1", Dimension::dimensionless), WithinRel(0.05065, 1e-15));
    CHECK_THAT(sc.get("tau", Dimension::time), WithinRel(1.5e-12, 1e-15));
    CHECK_THAT(sc.get("kappa", Dimension::dispersion), WithinRel(0.3e-9, 1e-15));
    CHECK(std::isinf(sc.get("wide", Dimension::length)));
    CHECK(sc.flag_or("flag", false));
    CHECK(sc.get_or("absent", Dimension::length, 7.0) == 7.0);
}

TEST_CASE("scenario errors name the key")
{
    const Scenario sc = Scenario::parse("theta = 54.7 nm\nbad = 1.2.3\nodd = 4 furlong\n");
    CHECK_THROWS_WITH(sc.get("theta", Dimension::angle), ContainsSubstring("'theta'") && ContainsSubstring("unit"));
    CHECK_THROWS_WITH(sc.get("bad", Dimension::dimensionless), ContainsSubstring("'bad'"));
    CHECK_THROWS_WITH(sc.get("odd", Dimension::length), ContainsSubstring("'odd'") && ContainsSubstring("furlong"));
    CHECK_THROWS_WITH(sc.get("missing", Dimension::length), ContainsSubstring("'missing'"));
    CHECK_THROWS_AS(Scenario::parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(Scenario::parse("just text\n"), ConfigError);
}

TEST_CASE("sweeps from ranges")
{
    const Scenario sc = Scenario::parse("x_min = 1 nm\nx_max = 3 nm\nx_steps = 5\n");
    const auto x = sc.sweep("x", Dimension::length);
    REQUIRE(x.size() == 5);
    CHECK_THAT(x[1], WithinRel(1.5e-9, 1e-14));
    CHECK_THAT(x.back(), WithinRel(3e-9, 1e-14));
}

TEST_CASE("csv output reads back exactly")
{
    CsvTable t;
    t.header = {"a", "b"};
    t.add({0.1, 1.0 / 3.0});
    t.add({1e-17, -2.5e8});
    const CsvData d = parse_output(t.str());
    REQUIRE(d.rows.size() == 2);
    CHECK(d.rows[0][1] == 1.0 / 3.0);
    CHECK(d.rows[1][0] == 1e-17);
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("usage errors exit with status 1 and a one-line diagnostic")
{
    SECTION("unknown command")
    {
        const auto r = invoke({"frobnicate", "--config", (scenarios / "fidelity.conf").string()});
        CHECK(r.status == 1);
        CHECK_THAT(r.err, ContainsSubstring("frobnicate"));
    }
    SECTION("missing config flag")
    {
        CHECK(invoke({"fidelity"}).status == 1);
    }
    SECTION("unreadable config")
    {
        const auto r = invoke({"fidelity", "--config", "/nonexistent/x.conf"});
        CHECK(r.status == 1);
        CHECK_THAT(r.err, ContainsSubstring("/nonexistent/x.conf"));
    }
    SECTION("missing key")
    {
        const auto r = run_config("fidelity", "overlap = 0.65\n");
        CHECK(r.status == 1);
        CHECK_THAT(r.err, ContainsSubstring("'rho1'"));
        CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    }
    SECTION("unit mismatch")
    {
        const auto r = run_config("ellipse", "pump_fwhm = 2.5 ps\npm_fwhm = 0.5 nm\ntheta = 54.7 deg\nlength = 2 mm\n");
        CHECK(r.status == 1);
        CHECK_THAT(r.err, ContainsSubstring("'pump_fwhm'"));
    }
    SECTION("unreadable data file")
    {
        const auto r = run_config("fit-overlap", "p0 = 0.95\np1 = 0.0498\np2 = 0.0002\ndata = /nonexistent.csv\n");
        CHECK(r.status == 1);
        CHECK_THAT(r.err, ContainsSubstring("'data'"));
    }
    SECTION("invalid values")
    {
        CHECK(run_config("fidelity", "overlap = 1.5\nrho1 = 0.9\n").status == 1);
        CHECK(run_config("invert", "efficiency = 0.05\nreadout = tmd9\nclicks = 0.9, 0.1, 0\n").status == 1);
    }
}

TEST_CASE("non-convergence exits with status 2 and still writes the estimate")
{
    const auto r = run_config("invert", "efficiency = 4.8 %\nnmax = 6\nmax_iter = 5\nclicks = 0.9492, 0.05065, 0.00015\n");
    CHECK(r.status == 2);
    CHECK_THAT(r.err, ContainsSubstring("converge"));
    CHECK(parse_output(r.out).rows.size() == 7);
}

TEST_CASE("ellipse of the reconstructed source")
{
    const auto r = invoke({"ellipse", "--config", (scenarios / "ellipse.conf").string()});
    REQUIRE(r.status == 0);
    const auto tilt = labelled_column(r.out, "tilt_deg");
    REQUIRE(tilt.size() == 2);
    CHECK_THAT(tilt[0], WithinAbs(54.7, 0.1));
    const auto minor = labelled_column(r.out, "minor_fwhm_nm");
    CHECK_THAT(minor[0], WithinAbs(0.5, 0.01));
}

TEST_CASE("inverting the three-fold statistics")
{
    const auto r = invoke({"invert", "--config", (scenarios / "invert_three_fold.conf").string()});
    REQUIRE(r.status == 0);
    const auto rho = parse_output(r.out).column({"probability"}, "out");
    CHECK(rho[1] >= 0.925);
    CHECK(rho[1] <= 0.937);
    CHECK(rho[2] >= 0.060);
    CHECK(rho[2] <= 0.072);
}

TEST_CASE("visibility curve re-ingested by the overlap fit reproduces the overlap")
{
    const fs::path curve = scratch("curve.csv");
    const auto r = invoke({"visibility-curve", "--config", (scenarios / "visibility_three_fold.conf").string(), "--out",
                           curve.string()});
    REQUIRE(r.status == 0);
    const auto fit = run_config("fit-overlap", "p0 = 94.920 %\np1 = 5.065 %\np2 = 0.015 %\ndata = " + curve.string() + "\n");
    REQUIRE(fit.status == 0);
    CHECK_THAT(parse_output(fit.out).column({"overlap"}, "out")[0], WithinAbs(0.65, 1e-9));
}

TEST_CASE("herald statistics re-ingested by the mode-reduction estimate")
{
    const fs::path m31 = scratch("m31.csv"), m1 = scratch("m1.csv");
    const std::string sweep = "trigger_efficiency = 0\ngain_sq = 0.01, 0.02, 0.03, 0.04, 0.05\nnmax = 80\n";
    REQUIRE(invoke({"herald-stats", "--config", write_file("h31.conf", "modes = 31\n" + sweep).string(), "--out",
                    m31.string()})
                .status == 0);
    REQUIRE(invoke({"herald-stats", "--config", write_file("h1.conf", "modes = 1\n" + sweep).string(), "--out",
                    m1.string()})
                .status == 0);
    const auto r = run_config("mode-reduction", "unfiltered_data = " + m31.string() + "\nfiltered_data = " +
                                                    m1.string() + "\nfiltered_modes = 1\n");
    REQUIRE(r.status == 0);
    const CsvData d = parse_output(r.out);
    CHECK_THAT(d.column({"slope_ratio"}, "out")[0], WithinRel(16.0, 1e-9));
    CHECK_THAT(d.column({"modes_unfiltered"}, "out")[0], WithinRel(31.0, 1e-9));
}

TEST_CASE("delay scan of the heralded signal")
{
    const auto r = invoke({"hom-scan", "--config", (scenarios / "hom_scan.conf").string(), "--verbose"});
    REQUIRE(r.status == 0);
    const CsvData d = parse_output(r.out);
    CHECK(d.rows.size() == 81);
    const auto c = d.column({"coincidence"}, "out");
    // dip at the centre of the scan
    CHECK(*std::min_element(c.begin(), c.end()) == c[40]);
    CHECK_THAT(r.err, ContainsSubstring("visibility"));

    const auto bad = run_config("hom-scan", "signal = pdc\nmodel = full\np0 = 0.95\np1 = 0.05\np2 = 0\nbeta_sq = 0.01\n"
                                            "reference_fwhm = 1 nm\ntau = 0 ps\n");
    CHECK(bad.status == 1);
    CHECK_THAT(bad.err, ContainsSubstring("'model'"));
}

TEST_CASE("every sample scenario runs")
{
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"pm-vs-length", "pm_vs_length.conf"},   {"ellipse", "ellipse.conf"},
        {"filter", "filter.conf"},               {"twin-hom", "twin_hom.conf"},
        {"herald-stats", "herald_stats.conf"},   {"visibility-curve", "visibility_two_fold.conf"},
        {"visibility-curve", "visibility_three_fold.conf"}, {"fit-overlap", "fit_overlap.conf"},
        {"hom-scan", "hom_scan.conf"},           {"dip-width", "dip_width.conf"},
        {"tmax", "tmax.conf"},                   {"invert", "invert_three_fold.conf"},
        {"invert", "invert_tmd.conf"},           {"fidelity", "fidelity.conf"},
        {"mode-reduction", "mode_reduction.conf"},
    };
    for (const auto& [cmd, conf] : cases) {
        INFO(cmd << " " << conf);
        const auto r = invoke({cmd, "--config", (scenarios / conf).string()});
        CHECK(r.status == 0);
        CHECK(r.err.empty());
        CHECK(std::count(r.out.begin(), r.out.end(), '\n') > 1);
    }
}

TEST_CASE("grid-points override")
{
    const auto r = invoke({"tmax", "--config", (scenarios / "tmax.conf").string(), "--grid-points", "400"});
    REQUIRE(r.status == 0);
    const auto base = invoke({"tmax", "--config", (scenarios / "tmax.conf").string()});
    const auto a = parse_output(r.out).column({"tmax_three_fold"}, "out");
    const auto b = parse_output(base.out).column({"tmax_three_fold"}, "out");
    for (std::size_t k = 0; k < a.size(); ++k)
        CHECK_THAT(a[k], WithinAbs(b[k], 1e-3));
    CHECK(invoke({"tmax", "--config", (scenarios / "tmax.conf").string(), "--grid-points", "20"}).status == 1);
}
