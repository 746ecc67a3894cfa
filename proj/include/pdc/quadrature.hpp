#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pdc {

// Uniformly spaced sample axis: start, start + step, ..., start + (size-1) step.
struct UniformAxis {
    double start = 0.0;
    double step = 1.0;
    std::size_t size = 0;

    double at(std::size_t k) const { return start + step * static_cast<double>(k); }
    double back() const { return at(size - 1); }

    std::vector<double> values() const
    {
        std::vector<double> v(size);
        for (std::size_t k = 0; k < size; ++k)
            v[k] = at(k);
        return v;
    }

    bool operator==(const UniformAxis&) const = default;

    // Same samples to within a tiny fraction of the step.
    bool matches(const UniformAxis& other) const
    {
        if (size != other.size)
            return false;
        const double tol = 1e-9 * std::abs(step);
        return std::abs(start - other.start) <= tol && std::abs(step - other.step) <= 1e-12 * std::abs(step);
    }
};

// n samples spanning [lo, hi] inclusive.
inline UniformAxis make_axis(double lo, double hi, std::size_t n)
{
    if (n < 2)
        throw std::invalid_argument("axis needs at least two samples");
    if (!(hi > lo))
        throw std::invalid_argument("axis must be strictly increasing");
    return UniformAxis{lo, (hi - lo) / static_cast<double>(n - 1), n};
}

// Symmetric axis [-half_extent, half_extent] around `center`.
inline UniformAxis make_centered_axis(double center, double half_extent, std::size_t n)
{
    return make_axis(center - half_extent, center + half_extent, n);
}

// Trapezoid weights for a uniform axis.
inline std::vector<double> trapezoid_weights(const UniformAxis& axis)
{
    std::vector<double> w(axis.size, axis.step);
    if (!w.empty()) {
        w.front() *= 0.5;
        w.back() *= 0.5;
    }
    return w;
}

template <class F>
double trapezoid(const UniformAxis& axis, F&& f)
{
    const auto w = trapezoid_weights(axis);
    double acc = 0.0;
    for (std::size_t k = 0; k < axis.size; ++k)
        acc += w[k] * f(axis.at(k));
    return acc;
}

} // namespace pdc
