#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdc/errors.hpp"
#include "pdc/quadrature.hpp"
#include "pdc/units.hpp"

// Gaussian joint-spectral-amplitude model of a waveguided PDC source.
//
// The joint amplitude is
//
//     phi(nu_s, nu_i) = exp(-(nu_s + nu_i)^2 / sigma^2)                 pump
//                     * exp(-gamma L^2 (k_s nu_s + k_i nu_i)^2 / 4)      phase matching
//                     * exp(i L (k_s nu_s + k_i nu_i) / 2)
//
// so |phi| = exp(-nu^T M nu) with the symmetric 2x2 form M. All widths are
// amplitude 1/e half-widths in rad/s (see units.hpp).

namespace pdc {

using cplx = std::complex<double>;

inline constexpr double default_gamma = 0.193;

struct PdcModelParams {
    double sigma_pump = 0.0;  // rad/s; +inf is the broadband-pump limit
    double kappa_s = 0.0;     // s/m
    double kappa_i = 0.0;     // s/m
    double length = 0.0;      // m
    double gamma = default_gamma;
    double pump_wavelength = 398e-9;   // m, metadata for unit conversion
    double signal_wavelength = 796e-9; // m
    double idler_wavelength = 796e-9;  // m

    void validate() const
    {
        if (!(sigma_pump > 0.0))
            throw std::invalid_argument("sigma_pump must be positive");
        if (!(length > 0.0) || !std::isfinite(length))
            throw std::invalid_argument("length must be positive");
        if (!(gamma > 0.0 && gamma <= 1.0))
            throw std::invalid_argument("gamma must lie in (0, 1]");
        if (kappa_s == 0.0 && kappa_i == 0.0)
            throw std::invalid_argument("kappa_s and kappa_i cannot both be zero");
    }

    double inv_pump_sq() const { return std::isinf(sigma_pump) ? 0.0 : 1.0 / (sigma_pump * sigma_pump); }
};

// 1/sigma_PM^2 = gamma (k_s^2 + k_i^2) L^2 / 4
inline double pm_width(const PdcModelParams& p)
{
    p.validate();
    const double k2 = p.kappa_s * p.kappa_s + p.kappa_i * p.kappa_i;
    return 2.0 / (p.length * std::sqrt(p.gamma * k2));
}

// Group-velocity mismatch coefficients that put the phase-matching minor
// axis at `pm_sigma` with tilt tan(theta) = k_s / k_i.
inline PdcModelParams params_from_pm_geometry(double sigma_pump, double pm_sigma, double tilt_deg,
                                              double length, double gamma = default_gamma)
{
    if (!(pm_sigma > 0.0))
        throw std::invalid_argument("pm width must be positive");
    const double k = 2.0 / (length * pm_sigma * std::sqrt(gamma));
    const double th = units::deg_to_rad(tilt_deg);
    PdcModelParams p;
    p.sigma_pump = sigma_pump;
    p.kappa_s = k * std::sin(th);
    p.kappa_i = k * std::cos(th);
    p.length = length;
    p.gamma = gamma;
    p.validate();
    return p;
}

// Delay accumulated by the signal through the linear PM phase. A HOM scan
// against an external reference is centred at tau = -signal_group_delay.
inline double signal_group_delay(const PdcModelParams& p) { return 0.5 * p.length * p.kappa_s; }
inline double dip_center(const PdcModelParams& p) { return -signal_group_delay(p); }

// ---------------------------------------------------------------------------
// Correlation ellipse

struct CorrelationEllipse {
    double m11 = 0.0, m12 = 0.0, m22 = 0.0; // 1/(rad/s)^2
    double tilt_deg = 0.0;                   // orientation of the major axis
    double minor_width = 0.0;                // rad/s
    std::optional<double> major_width;       // empty: unbounded (rank-1 form)
    std::optional<double> aspect_ratio;      // empty when major is unbounded

    bool major_unbounded() const { return !major_width.has_value(); }

    Eigen::Matrix2d form() const
    {
        Eigen::Matrix2d m;
        m << m11, m12, m12, m22;
        return m;
    }
};

inline Eigen::Matrix2d correlation_form(const PdcModelParams& p)
{
    p.validate();
    const double pump = p.inv_pump_sq();
    const double pm = 0.25 * p.gamma * p.length * p.length;
    Eigen::Matrix2d m;
    m(0, 0) = pump + pm * p.kappa_s * p.kappa_s;
    m(0, 1) = pump + pm * p.kappa_s * p.kappa_i;
    m(1, 0) = m(0, 1);
    m(1, 1) = pump + pm * p.kappa_i * p.kappa_i;
    return m;
}

// Geometry of the level sets of exp(-nu^T M nu). The smaller eigenvalue
// belongs to the major (wider) axis. The tilt is measured so that an
// anti-correlated ellipse with k_s, k_i > 0 lands in (0, 90) degrees and
// satisfies tan(theta) = k_s / k_i in the broadband-pump limit.
inline CorrelationEllipse ellipse_from_form(const Eigen::Matrix2d& m)
{
    const double a = m(0, 0), b = 0.5 * (m(0, 1) + m(1, 0)), d = m(1, 1);
    const double half_trace = 0.5 * (a + d);
    const double radius = std::hypot(0.5 * (a - d), b);
    const double lam_max = half_trace + radius;
    // det / lam_max avoids cancellation in half_trace - radius
    double lam_min = lam_max > 0.0 ? (a * d - b * b) / lam_max : 0.0;
    if (!(lam_max > 0.0))
        throw std::invalid_argument("correlation form must be positive semi-definite and non-zero");
    if (lam_min < -1e-9 * lam_max)
        throw std::invalid_argument("correlation form is not positive semi-definite");

    CorrelationEllipse e;
    e.m11 = a;
    e.m12 = b;
    e.m22 = d;
    e.minor_width = 1.0 / std::sqrt(lam_max);
    if (lam_min > 1e-12 * lam_max) {
        e.major_width = 1.0 / std::sqrt(lam_min);
        e.aspect_ratio = std::sqrt(lam_max / lam_min);
    }
    double tilt = units::rad_to_deg(0.5 * std::atan2(2.0 * b, d - a));
    if (tilt < 0.0)
        tilt += 180.0;
    e.tilt_deg = tilt;
    return e;
}

inline CorrelationEllipse build_ellipse(const PdcModelParams& p) { return ellipse_from_form(correlation_form(p)); }

struct PmWidthPoint {
    double length;          // m
    double fwhm_wavelength; // m, intensity FWHM at the signal wavelength
};

inline std::vector<PmWidthPoint> pm_width_vs_length(const PdcModelParams& p, const std::vector<double>& lengths)
{
    std::vector<PmWidthPoint> out;
    out.reserve(lengths.size());
    for (double len : lengths) {
        if (!(len > 0.0))
            throw std::invalid_argument("lengths must be positive");
        PdcModelParams q = p;
        q.length = len;
        out.push_back({len, units::wavelength_fwhm_from_sigma(pm_width(q), p.signal_wavelength)});
    }
    return out;
}

// tan(theta) = d_omega_i / d_omega_s, marginal FWHMs.
inline double tilt_from_marginals(double delta_omega_s, double delta_omega_i)
{
    if (!(delta_omega_s > 0.0) || !(delta_omega_i > 0.0))
        throw std::invalid_argument("marginal widths must be positive");
    return units::rad_to_deg(std::atan(delta_omega_i / delta_omega_s));
}

inline double major_axis_from_marginals(double delta_omega_s, double tilt_deg)
{
    if (!(tilt_deg > 0.0 && tilt_deg < 90.0))
        throw std::invalid_argument("tilt must lie strictly between 0 and 90 degrees");
    return delta_omega_s / std::cos(units::deg_to_rad(tilt_deg));
}

// ---------------------------------------------------------------------------
// Gaussian joint amplitude and its sampled form

// exp(-nu^T form nu + i phase_slope . nu)
struct GaussianJsa {
    Eigen::Matrix2d form = Eigen::Matrix2d::Zero();
    Eigen::Vector2d phase_slope = Eigen::Vector2d::Zero(); // s

    cplx operator()(double nu_s, double nu_i) const
    {
        const double q = form(0, 0) * nu_s * nu_s + 2.0 * form(0, 1) * nu_s * nu_i + form(1, 1) * nu_i * nu_i;
        const double ph = phase_slope(0) * nu_s + phase_slope(1) * nu_i;
        return std::polar(std::exp(-q), ph);
    }
};

inline GaussianJsa jsa_from_params(const PdcModelParams& p)
{
    GaussianJsa j;
    j.form = correlation_form(p);
    j.phase_slope = {0.5 * p.length * p.kappa_s, 0.5 * p.length * p.kappa_i};
    return j;
}

// Joint amplitude parameterised by ellipse geometry alone. The minor axis is
// identified with the phase-matching width, and the PM phase runs along it.
inline GaussianJsa ellipse_jsa(double tilt_deg, double aspect_ratio, double minor_width, double gamma = default_gamma)
{
    if (!(aspect_ratio >= 1.0))
        throw std::invalid_argument("aspect ratio must be >= 1");
    if (!(minor_width > 0.0))
        throw std::invalid_argument("minor width must be positive");
    const double th = units::deg_to_rad(tilt_deg);
    const double c = std::cos(th), s = std::sin(th);
    Eigen::Matrix2d rot;
    rot << c, s, -s, c; // columns: major (c, -s), minor (s, c)
    const double major = aspect_ratio * minor_width;
    Eigen::Matrix2d diag = Eigen::Matrix2d::Zero();
    diag(0, 0) = 1.0 / (major * major);
    diag(1, 1) = 1.0 / (minor_width * minor_width);
    GaussianJsa j;
    j.form = rot * diag * rot.transpose();
    j.phase_slope = Eigen::Vector2d(s, c) / (minor_width * std::sqrt(gamma));
    return j;
}

struct SpectralFilter {
    double center_detuning = 0.0; // rad/s
    double amplitude_width = std::numeric_limits<double>::infinity();
    double peak_transmission = 1.0;

    static SpectralFilter unity() { return {}; }

    void validate() const
    {
        if (!(amplitude_width > 0.0))
            throw std::invalid_argument("filter width must be positive");
        if (!(peak_transmission >= 0.0 && peak_transmission <= 1.0))
            throw std::invalid_argument("peak transmission must lie in [0, 1]");
    }

    // sqrt(t(nu))
    double amplitude(double nu) const
    {
        if (std::isinf(amplitude_width))
            return std::sqrt(peak_transmission);
        const double x = (nu - center_detuning) / amplitude_width;
        return std::sqrt(peak_transmission) * std::exp(-x * x);
    }

    // intensity transmission t(nu)
    double transmission(double nu) const
    {
        const double a = amplitude(nu);
        return a * a;
    }

    double inv_width_sq() const { return std::isinf(amplitude_width) ? 0.0 : 1.0 / (amplitude_width * amplitude_width); }
};

// Ellipse of the filtered amplitude phi * sqrt(t_s) * sqrt(t_i).
inline CorrelationEllipse filtered_ellipse(const GaussianJsa& jsa, const SpectralFilter& fs, const SpectralFilter& fi)
{
    Eigen::Matrix2d m = jsa.form;
    m(0, 0) += fs.inv_width_sq();
    m(1, 1) += fi.inv_width_sq();
    return ellipse_from_form(m);
}

struct GridAxes {
    UniformAxis signal;
    UniformAxis idler;
};

// Axes that cover `extent_widths` 1/e widths of the (filtered) amplitude on
// each side of its centre, with at least `samples_per_width` samples per
// conditional width. With `square`, both axes are identical (needed when the
// amplitude is transposed, e.g. for the twin-photon overlap).
inline GridAxes auto_axes(const GaussianJsa& jsa, const SpectralFilter& fs = SpectralFilter::unity(),
                          const SpectralFilter& fi = SpectralFilter::unity(), bool square = false,
                          double samples_per_width = 8.0, double extent_widths = 4.0)
{
    Eigen::Matrix2d m = jsa.form;
    Eigen::Vector2d lin = Eigen::Vector2d::Zero();
    m(0, 0) += fs.inv_width_sq();
    m(1, 1) += fi.inv_width_sq();
    lin(0) = fs.inv_width_sq() * fs.center_detuning;
    lin(1) = fi.inv_width_sq() * fi.center_detuning;
    if (!(m.determinant() > 0.0))
        throw std::invalid_argument("amplitude is unbounded; add a pump width or filters to fix a grid extent");
    const Eigen::Matrix2d cov = m.inverse();
    const Eigen::Vector2d mu = cov * lin;

    double lo[2], hi[2], step[2];
    for (int k = 0; k < 2; ++k) {
        const double half = extent_widths * std::sqrt(cov(k, k));
        lo[k] = mu(k) - half;
        hi[k] = mu(k) + half;
        step[k] = 1.0 / std::sqrt(m(k, k)) / samples_per_width;
    }
    if (square) {
        lo[0] = lo[1] = std::min(lo[0], lo[1]);
        hi[0] = hi[1] = std::max(hi[0], hi[1]);
        step[0] = step[1] = std::min(step[0], step[1]);
    }
    GridAxes out;
    for (int k = 0; k < 2; ++k) {
        const auto n = static_cast<std::size_t>(std::ceil((hi[k] - lo[k]) / step[k])) + 1;
        (k == 0 ? out.signal : out.idler) = make_axis(lo[k], hi[k], std::max<std::size_t>(n, 3));
    }
    return out;
}

// Same extents as auto_axes but a fixed number of samples per axis.
inline GridAxes resample_axes(const GridAxes& axes, std::size_t points)
{
    return {make_axis(axes.signal.start, axes.signal.back(), points),
            make_axis(axes.idler.start, axes.idler.back(), points)};
}

class SpectralGrid {
public:
    SpectralGrid(UniformAxis nu_s, UniformAxis nu_i, Eigen::MatrixXcd amplitude)
        : nu_s_(nu_s), nu_i_(nu_i), amplitude_(std::move(amplitude))
    {
        if (!(nu_s_.step > 0.0) || !(nu_i_.step > 0.0))
            throw std::invalid_argument("grid axes must be strictly increasing");
        if (static_cast<std::size_t>(amplitude_.rows()) != nu_s_.size ||
            static_cast<std::size_t>(amplitude_.cols()) != nu_i_.size)
            throw std::invalid_argument("grid amplitude does not match its axes");
        const auto ws = trapezoid_weights(nu_s_);
        const auto wi = trapezoid_weights(nu_i_);
        double acc = 0.0;
        for (Eigen::Index j = 0; j < amplitude_.cols(); ++j) {
            double col = 0.0;
            for (Eigen::Index k = 0; k < amplitude_.rows(); ++k)
                col += ws[k] * std::norm(amplitude_(k, j));
            acc += wi[j] * col;
        }
        norm_ = acc;
    }

    const UniformAxis& nu_s() const { return nu_s_; }
    const UniformAxis& nu_i() const { return nu_i_; }
    const Eigen::MatrixXcd& amplitude() const { return amplitude_; }
    // trapezoid estimate of the double integral of |phi|^2
    double norm() const { return norm_; }

private:
    UniformAxis nu_s_;
    UniformAxis nu_i_;
    Eigen::MatrixXcd amplitude_;
    double norm_ = 0.0;
};

inline constexpr double min_samples_per_width = 8.0;

inline SpectralGrid evaluate_jsa(const GaussianJsa& jsa, const GridAxes& axes)
{
    const UniformAxis* ax[2] = {&axes.signal, &axes.idler};
    for (int k = 0; k < 2; ++k) {
        const double mkk = jsa.form(k, k);
        if (mkk <= 0.0)
            continue;
        const double width = 1.0 / std::sqrt(mkk);
        if (ax[k]->step * min_samples_per_width > width * (1.0 + 1e-9))
            throw std::invalid_argument(std::string("grid too coarse along the ") + (k == 0 ? "signal" : "idler") +
                                        " axis: fewer than 8 samples per amplitude width");
    }
    Eigen::MatrixXcd a(axes.signal.size, axes.idler.size);
    for (std::size_t j = 0; j < axes.idler.size; ++j) {
        const double ni = axes.idler.at(j);
        for (std::size_t k = 0; k < axes.signal.size; ++k)
            a(k, j) = jsa(axes.signal.at(k), ni);
    }
    return SpectralGrid(axes.signal, axes.idler, std::move(a));
}

inline SpectralGrid evaluate_jsa(const PdcModelParams& p, const GridAxes& axes)
{
    return evaluate_jsa(jsa_from_params(p), axes);
}

// Multiplies the amplitude by sqrt(t_s(nu_s)) sqrt(t_i(nu_i)).
inline SpectralGrid apply_filters(const SpectralGrid& grid, const SpectralFilter& fs, const SpectralFilter& fi)
{
    fs.validate();
    fi.validate();
    Eigen::VectorXd ts(grid.nu_s().size), ti(grid.nu_i().size);
    for (std::size_t k = 0; k < grid.nu_s().size; ++k)
        ts(k) = fs.amplitude(grid.nu_s().at(k));
    for (std::size_t j = 0; j < grid.nu_i().size; ++j)
        ti(j) = fi.amplitude(grid.nu_i().at(j));
    Eigen::MatrixXcd a = ts.asDiagonal() * grid.amplitude() * ti.asDiagonal();
    return SpectralGrid(grid.nu_s(), grid.nu_i(), std::move(a));
}

// ---------------------------------------------------------------------------
// Second-harmonic probe of the phase-matching function

// Envelope exp(-(nu - center)^2 / width^2) of the SH response as the
// fundamental probe is tuned along omega_s = omega_i.
struct ShEnvelope {
    double center = 0.0; // rad/s
    double width = 0.0;  // rad/s

    double operator()(double nu) const
    {
        const double x = (nu - center) / width;
        return std::exp(-x * x);
    }

    std::vector<double> sample(const UniformAxis& axis) const
    {
        std::vector<double> v(axis.size);
        for (std::size_t k = 0; k < axis.size; ++k)
            v[k] = (*this)(axis.at(k));
        return v;
    }
};

// A probe of finite bandwidth broadens the envelope: widths add in quadrature.
inline ShEnvelope sh_response(const PdcModelParams& p, double probe_center, double probe_width)
{
    if (!(probe_width >= 0.0))
        throw std::invalid_argument("probe width must be non-negative");
    const double pm = pm_width(p);
    return {probe_center, std::hypot(pm, probe_width)};
}

// ---------------------------------------------------------------------------
// Reduced one-photon spectral density

struct ReducedDensity {
    UniformAxis axis;          // rad/s
    Eigen::MatrixXcd density;  // g(omega_1, omega_2)

    double trace() const
    {
        const auto w = trapezoid_weights(axis);
        double t = 0.0;
        for (std::size_t k = 0; k < axis.size; ++k)
            t += w[k] * density(k, k).real();
        return t;
    }
};

// Signal density after tracing out the idler:
// g(w1, w2) = (1/N) int dw_i phi(w1, w_i) phi*(w2, w_i) t_i(w_i) sqrt(t_s(w1) t_s(w2))
inline ReducedDensity reduced_density(const SpectralGrid& grid, const SpectralFilter& fs, const SpectralFilter& fi)
{
    const SpectralGrid filtered = apply_filters(grid, fs, fi);
    const auto wi = trapezoid_weights(grid.nu_i());
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(wi.data(), static_cast<Eigen::Index>(wi.size()));
    const Eigen::MatrixXcd& phi = filtered.amplitude();
    Eigen::MatrixXcd k = phi * w.asDiagonal() * phi.adjoint();
    ReducedDensity g{grid.nu_s(), std::move(k)};
    const double n = g.trace();
    if (!(n > 1e-12 * grid.norm()) || !std::isfinite(n))
        throw NumericalError("filtered state has vanishing norm: filters do not overlap the joint amplitude");
    g.density /= n;
    // exact Hermitian symmetry
    g.density = 0.5 * (g.density + g.density.adjoint()).eval();
    return g;
}

// Tr(g^2) under trapezoid quadrature, for unit-trace g.
inline double purity(const ReducedDensity& g)
{
    const auto w = trapezoid_weights(g.axis);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < g.density.cols(); ++j) {
        double col = 0.0;
        for (Eigen::Index k = 0; k < g.density.rows(); ++k)
            col += w[k] * std::norm(g.density(k, j));
        acc += w[j] * col;
    }
    return acc;
}

} // namespace pdc
