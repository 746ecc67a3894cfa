#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "pdc/errors.hpp"
#include "pdc/jsa.hpp"
#include "pdc/units.hpp"

// Hong-Ou-Mandel interference between the signal and idler of one source.

namespace pdc {

struct OverlapBreakdown {
    double o_spectral = 1.0;
    double o_temporal = 1.0;
    double o_total = 1.0;
};

namespace detail {

inline void check_aspect(double aspect_ratio)
{
    if (!(aspect_ratio >= 1.0))
        throw std::invalid_argument("aspect ratio must be >= 1");
}

// (1 + A^4)(1 - sin^2 2t) + 2 A^2 (1 + sin^2 2t)
inline double overlap_denominator(double a2, double s)
{
    return (1.0 + a2 * a2) * (1.0 - s * s) + 2.0 * a2 * (1.0 + s * s);
}

} // namespace detail

inline double spectral_overlap(double aspect_ratio, double tilt_deg)
{
    detail::check_aspect(aspect_ratio);
    const double s = std::sin(2.0 * units::deg_to_rad(tilt_deg));
    const double a2 = aspect_ratio * aspect_ratio;
    return 2.0 * aspect_ratio / std::sqrt(detail::overlap_denominator(a2, s));
}

// Takes the phase-matching width equal to the ellipse's minor axis.
inline double temporal_overlap(double aspect_ratio, double tilt_deg, double gamma = default_gamma)
{
    detail::check_aspect(aspect_ratio);
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("gamma must lie in (0, 1]");
    const double s = std::sin(2.0 * units::deg_to_rad(tilt_deg));
    const double a2 = aspect_ratio * aspect_ratio;
    const double num = (1.0 - s * s) * a2 + (1.0 - s) * (1.0 - s);
    return std::exp(-a2 / (2.0 * gamma) * num / detail::overlap_denominator(a2, s));
}

inline OverlapBreakdown closed_form_overlap(double aspect_ratio, double tilt_deg, double gamma = default_gamma)
{
    OverlapBreakdown o;
    o.o_spectral = spectral_overlap(aspect_ratio, tilt_deg);
    o.o_temporal = temporal_overlap(aspect_ratio, tilt_deg, gamma);
    o.o_total = o.o_spectral * o.o_temporal;
    return o;
}

// |int phi(s, i) phi*(i, s)| / int |phi|^2 by trapezoid quadrature. `delay`
// shifts the signal in time relative to the idler (zero: no delay line).
inline double overlap_numeric(const SpectralGrid& grid, double delay = 0.0)
{
    if (!grid.nu_s().matches(grid.nu_i()))
        throw std::invalid_argument("overlap needs identical signal and idler axes");
    const auto& axis = grid.nu_s();
    const auto w = trapezoid_weights(axis);
    const auto& phi = grid.amplitude();
    const Eigen::Index n = phi.rows();

    std::vector<cplx> shift(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k)
        shift[k] = std::polar(1.0, delay * axis.at(k));

    cplx acc{0.0, 0.0};
    for (Eigen::Index j = 0; j < n; ++j) {
        cplx col{0.0, 0.0};
        for (Eigen::Index k = 0; k < n; ++k)
            col += w[k] * shift[k] * phi(k, j) * std::conj(phi(j, k));
        acc += w[j] * std::conj(shift[j]) * col;
    }
    const double mod = std::abs(acc);
    if (std::abs(acc.imag()) > 1e-9 * mod + 1e-300)
        throw NumericalError("twin-photon overlap integral is not real; grid is not symmetric under exchange");
    return mod / grid.norm();
}

// V = (1 + O) / (3 - O)
inline double visibility_from_overlap(double o)
{
    if (!(o >= -1e-12 && o <= 1.0 + 1e-12))
        throw std::invalid_argument("overlap must lie in [0, 1]");
    return (1.0 + o) / (3.0 - o);
}

inline double overlap_from_visibility(double v)
{
    if (!(v >= 1.0 / 3.0 - 1e-12 && v <= 1.0 + 1e-12))
        throw std::invalid_argument("visibility outside [1/3, 1] is unphysical for the twin-photon model");
    return (3.0 * v - 1.0) / (v + 1.0);
}

} // namespace pdc
