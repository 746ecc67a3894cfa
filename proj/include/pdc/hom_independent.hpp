#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pdc/errors.hpp"
#include "pdc/jsa.hpp"
#include "pdc/photon_stats.hpp"
#include "pdc/quadrature.hpp"

// HOM interference between the heralded signal and an attenuated coherent
// reference: coincidence probability, visibility versus reference strength,
// dip width, spectral overlap and the fidelity of the prepared one-photon state.

namespace pdc {

// Signal truncated at two photons.
struct SignalState {
    double p0 = 1.0, p1 = 0.0, p2 = 0.0;

    void validate() const
    {
        if (!(p0 >= 0.0 && p1 >= 0.0 && p2 >= 0.0))
            throw std::invalid_argument("signal probabilities must be non-negative");
        if (std::abs(p0 + p1 + p2 - 1.0) > 1e-9)
            throw std::invalid_argument("signal probabilities must sum to one");
    }

    // First three components, renormalised.
    static SignalState from_dist(const PhotonNumberDist& d)
    {
        const double s = d[0] + d[1] + d[2];
        if (!(s > 0.0))
            throw std::invalid_argument("distribution has no weight below three photons");
        return {d[0] / s, d[1] / s, d[2] / s};
    }
};

struct SampledAmplitude {
    UniformAxis axis;
    Eigen::VectorXcd values;

    double norm() const
    {
        const auto w = trapezoid_weights(axis);
        double acc = 0.0;
        for (Eigen::Index k = 0; k < values.size(); ++k)
            acc += w[k] * std::norm(values(k));
        return acc;
    }
};

// Transform-limited Gaussian reference, normalised to int |u|^2 = 1.
struct ReferenceField {
    double mean_photons = 0.0; // |beta|^2
    double center = 0.0;       // rad/s detuning
    double width = 0.0;        // amplitude 1/e half-width, rad/s

    void validate() const
    {
        if (!(mean_photons >= 0.0))
            throw std::invalid_argument("reference mean photon number must be non-negative");
        if (!(width > 0.0))
            throw std::invalid_argument("reference width must be positive");
    }

    double amplitude(double nu) const
    {
        const double x = (nu - center) / width;
        return std::pow(2.0 / (std::numbers::pi * width * width), 0.25) * std::exp(-x * x);
    }

    SampledAmplitude sample(const UniformAxis& axis) const
    {
        validate();
        SampledAmplitude s{axis, Eigen::VectorXcd(static_cast<Eigen::Index>(axis.size))};
        for (std::size_t k = 0; k < axis.size; ++k)
            s.values(static_cast<Eigen::Index>(k)) = amplitude(axis.at(k));
        return s;
    }
};

// Reference detector singles: P = 1 - exp(-|beta|^2 / 2).
inline double singles_probability(double beta_sq) { return -std::expm1(-0.5 * beta_sq); }
inline double beta_sq_from_singles(double p_singles)
{
    if (!(p_singles >= 0.0 && p_singles < 1.0))
        throw std::invalid_argument("singles probability must lie in [0, 1)");
    return -2.0 * std::log1p(-p_singles);
}

// ---------------------------------------------------------------------------
// Spectral overlap with the reference

namespace detail {

inline void check_same_axis(const UniformAxis& a, const UniformAxis& b)
{
    if (!a.matches(b))
        throw std::invalid_argument("reference samples and signal density are on different frequency grids");
}

} // namespace detail

// int u*(w) f(w) exp(i tau w) dw
inline cplx amplitude_overlap(const SampledAmplitude& u, const SampledAmplitude& f, double tau)
{
    detail::check_same_axis(u.axis, f.axis);
    const auto w = trapezoid_weights(u.axis);
    cplx acc{0.0, 0.0};
    for (Eigen::Index k = 0; k < u.values.size(); ++k)
        acc += w[k] * std::conj(u.values(k)) * f.values(k) * std::polar(1.0, tau * u.axis.at(k));
    return acc;
}

// T(tau) for a pure signal mode f.
inline double overlap_T(const SampledAmplitude& u, const SampledAmplitude& f, double tau)
{
    return std::norm(amplitude_overlap(u, f, tau));
}

// T(tau) = int int u*(w1) g(w1, w2) u(w2) exp(i tau (w1 - w2)) for a mixed signal.
inline double overlap_T(const SampledAmplitude& u, const ReducedDensity& g, double tau)
{
    detail::check_same_axis(u.axis, g.axis);
    const auto w = trapezoid_weights(g.axis);
    Eigen::VectorXcd a(u.values.size());
    for (Eigen::Index k = 0; k < a.size(); ++k)
        a(k) = w[k] * u.values(k) * std::polar(1.0, -tau * g.axis.at(k));
    const cplx t = a.dot(g.density * a); // a^H g a
    if (std::abs(t.imag()) > 1e-8 * std::abs(t) + 1e-14)
        throw NumericalError("spectral overlap is not real; density is not Hermitian");
    return t.real();
}

inline double overlap_T(const ReferenceField& u, const ReducedDensity& g, double tau)
{
    return overlap_T(u.sample(g.axis), g, tau);
}

// Two-photon overlap for a factorised pure two-photon state f(w1) f(w2):
// the four-frequency integral factorises into |A(tau)|^4 = T(tau)^2.
inline double overlap_Tprime(const SampledAmplitude& u, const SampledAmplitude& f, double tau)
{
    const double t = overlap_T(u, f, tau);
    return t * t;
}

// ---------------------------------------------------------------------------
// Coincidence probability and visibility

// All five terms, with |beta'|^2 = |beta|^2 / 2.
inline double coincidence_full(const SignalState& s, double beta_sq, double t, double t_prime)
{
    s.validate();
    if (!(beta_sq >= 0.0))
        throw std::invalid_argument("beta_sq must be non-negative");
    const double b = 0.5 * beta_sq;
    const double e = std::exp(-b);
    const double one_minus_e = -std::expm1(-b);
    return s.p0 * one_minus_e * one_minus_e + s.p1 * one_minus_e - s.p1 * t * b * e + s.p2 * (1.0 - 0.5 * e) -
           s.p2 * e * (t * b + t_prime * b * b / 4.0);
}

inline constexpr double simplified_beta_sq_limit = 0.2;

// Weak-reference form: p0 |b'|^4 + p1 |b'|^2 (1 - T) + p2 / 2.
inline double coincidence_simplified(const SignalState& s, double beta_sq, double t)
{
    s.validate();
    if (!(beta_sq >= 0.0))
        throw std::invalid_argument("beta_sq must be non-negative");
    if (beta_sq >= simplified_beta_sq_limit)
        throw std::invalid_argument("beta_sq >= 0.2 is outside the weak-reference approximation; use coincidence_full");
    const double b = 0.5 * beta_sq;
    return s.p0 * b * b + s.p1 * b * (1.0 - t) + 0.5 * s.p2;
}

// Dip visibility from the full expression, with T(inf) = T'(inf) = 0.
inline double visibility_full(const SignalState& s, double beta_sq, double t0, double t0_prime)
{
    const double far = coincidence_full(s, beta_sq, 0.0, 0.0);
    if (!(far > 0.0))
        throw std::invalid_argument("no coincidences away from the dip");
    return (far - coincidence_full(s, beta_sq, t0, t0_prime)) / far;
}

// V(|beta|^2) = p1 T / (p0 |beta|^2 / 2 + p1 + p2 / |beta|^2)
inline double visibility_vs_beta(const SignalState& s, double t0, double beta_sq)
{
    s.validate();
    if (beta_sq < 0.0)
        throw std::invalid_argument("beta_sq must be positive");
    if (beta_sq == 0.0) {
        // limit: p2 > 0 -> 0; p2 == 0 -> T
        if (s.p2 > 0.0 || s.p1 == 0.0)
            return 0.0;
        return t0;
    }
    return s.p1 * t0 / (0.5 * s.p0 * beta_sq + s.p1 + s.p2 / beta_sq);
}

// |beta|^2 maximising the visibility: sqrt(2 p2 / p0).
inline double beta_opt(const SignalState& s)
{
    s.validate();
    if (s.p0 == 0.0)
        throw std::invalid_argument("optimum reference power is unbounded for p0 = 0");
    return std::sqrt(2.0 * s.p2 / s.p0);
}

inline double max_visibility(const SignalState& s, double t0)
{
    return visibility_vs_beta(s, t0, beta_opt(s));
}

struct OverlapFit {
    double t = 0.0;
    double std_error = 0.0;
    std::size_t points = 0;
};

// Least squares for T in V_k = T f(beta_k^2), f the T = 1 visibility curve.
inline OverlapFit fit_overlap(const std::vector<std::pair<double, double>>& beta_sq_visibility, const SignalState& s)
{
    s.validate();
    const auto& data = beta_sq_visibility;
    if (data.size() < 3)
        throw std::invalid_argument("overlap fit needs at least three (beta_sq, visibility) points");
    double bmin = data.front().first, bmax = bmin;
    for (const auto& [b, v] : data) {
        if (!(b > 0.0))
            throw std::invalid_argument("beta_sq values must be positive");
        bmin = std::min(bmin, b);
        bmax = std::max(bmax, b);
    }
    if (!(bmax > bmin))
        throw std::invalid_argument("degenerate design: all measurements share one beta_sq");
    double sff = 0.0, sfv = 0.0;
    for (const auto& [b, v] : data) {
        const double f = visibility_vs_beta(s, 1.0, b);
        sff += f * f;
        sfv += f * v;
    }
    if (!(sff > 0.0))
        throw std::invalid_argument("signal has no one-photon component to interfere");
    OverlapFit fit;
    fit.t = sfv / sff;
    fit.points = data.size();
    double rss = 0.0;
    for (const auto& [b, v] : data) {
        const double r = v - fit.t * visibility_vs_beta(s, 1.0, b);
        rss += r * r;
    }
    fit.std_error = std::sqrt(rss / static_cast<double>(data.size() - 1) / sff);
    return fit;
}

// ---------------------------------------------------------------------------
// Dip width, fidelity, maximal overlap

// sigma_t^2 = 1/sigma^2 + 1/sigma_ref^2 + 1/sigma_filter^2 + sin^2(theta)/sigma_pm^2,
// all widths amplitude half-widths in rad/s (infinite widths drop out).
inline double dip_width(double sigma_pump, double sigma_ref, double sigma_signal_filter, double sigma_pm,
                        double tilt_deg)
{
    auto inv_sq = [](double s) {
        if (!(s > 0.0))
            throw std::invalid_argument("widths must be positive");
        return std::isinf(s) ? 0.0 : 1.0 / (s * s);
    };
    const double st = std::sin(units::deg_to_rad(tilt_deg));
    return std::sqrt(inv_sq(sigma_pump) + inv_sq(sigma_ref) + inv_sq(sigma_signal_filter) + st * st * inv_sq(sigma_pm));
}

struct FidelityResult {
    double spectral_overlap = 0.0;
    double one_photon = 0.0;
    double fidelity = 0.0;
};

inline FidelityResult fidelity(double t, double rho1)
{
    if (!(t >= 0.0 && t <= 1.0) || !(rho1 >= 0.0 && rho1 <= 1.0))
        throw std::invalid_argument("overlap and one-photon probability must lie in [0, 1]");
    return {t, rho1, std::sqrt(t * rho1)};
}

// T at the dip centre for the PDC signal built from `grid`. With `heralded`,
// the idler passes the trigger filter; otherwise it is traced out unfiltered.
inline double tmax_prediction(const SpectralGrid& grid, const SpectralFilter& signal_filter,
                              const SpectralFilter& trigger_filter, const ReferenceField& ref, bool heralded,
                              double center = 0.0)
{
    const ReducedDensity g =
        reduced_density(grid, signal_filter, heralded ? trigger_filter : SpectralFilter::unity());
    return overlap_T(ref, g, center);
}

// ---------------------------------------------------------------------------
// Delay scans

enum class CoincidenceModel { simplified, full };

struct HomScan {
    std::vector<double> tau;         // s
    std::vector<double> overlap;     // T(tau)
    std::vector<double> coincidence; // probability per pulse
    double visibility = 0.0;
    double dip_center = 0.0;         // s
    double dip_sigma_t = 0.0;        // s
    double t_max = 0.0;
};

struct DipFit {
    double t_max = 0.0;
    double center = 0.0;
    double sigma_t = 0.0;
};

// Gaussian T_max exp(-(tau - c)^2 / (2 sigma_t^2)) through samples with
// T > 1e-3 max T, by quadratic least squares on log T.
inline DipFit fit_gaussian_dip(const std::vector<double>& tau, const std::vector<double>& t)
{
    if (tau.size() != t.size() || tau.size() < 3)
        throw std::invalid_argument("dip fit needs at least three samples");
    const double tmax = *std::max_element(t.begin(), t.end());
    if (!(tmax > 0.0))
        throw NumericalError("overlap vanishes everywhere on the scan");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k] > 1e-3 * tmax)
            pts.emplace_back(tau[k], std::log(t[k]));
    if (pts.size() < 3)
        throw NumericalError("too few scan points inside the dip to fit its width");
    double scale = 0.0;
    for (const auto& pt : pts)
        scale = std::max(scale, std::abs(pt.first));
    Eigen::MatrixXd x(static_cast<Eigen::Index>(pts.size()), 3);
    Eigen::VectorXd y(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double u = pts[k].first / scale;
        x.row(static_cast<Eigen::Index>(k)) << 1.0, u, u * u;
        y(static_cast<Eigen::Index>(k)) = pts[k].second;
    }
    const Eigen::Vector3d c = x.colPivHouseholderQr().solve(y);
    if (!(c(2) < 0.0))
        throw NumericalError("scan does not resolve a dip");
    DipFit f;
    const double a = -c(2) / (scale * scale);
    const double b = c(1) / scale;
    f.center = b / (2.0 * a);
    f.sigma_t = std::sqrt(1.0 / (2.0 * a));
    f.t_max = std::exp(c(0) + b * b / (4.0 * a));
    return f;
}

namespace detail {

template <class OverlapFn, class OverlapPrimeFn>
HomScan scan(const SignalState& s, double beta_sq, const std::vector<double>& taus, CoincidenceModel model,
             OverlapFn&& t_of, OverlapPrimeFn&& tp_of)
{
    s.validate();
    HomScan h;
    h.tau = taus;
    for (double tau : taus) {
        const double t = t_of(tau);
        h.overlap.push_back(t);
        h.coincidence.push_back(model == CoincidenceModel::full ? coincidence_full(s, beta_sq, t, tp_of(tau))
                                                                : coincidence_simplified(s, beta_sq, t));
    }
    const auto best = std::max_element(h.overlap.begin(), h.overlap.end()) - h.overlap.begin();
    h.dip_center = taus[static_cast<std::size_t>(best)];
    h.t_max = h.overlap[static_cast<std::size_t>(best)];
    const double far = model == CoincidenceModel::full ? coincidence_full(s, beta_sq, 0.0, 0.0)
                                                       : coincidence_simplified(s, beta_sq, 0.0);
    h.visibility = far > 0.0 ? (far - h.coincidence[static_cast<std::size_t>(best)]) / far : 0.0;
    if (taus.size() >= 3 && h.t_max > 0.0) {
        const DipFit fit = fit_gaussian_dip(h.tau, h.overlap);
        h.dip_center = fit.center;
        h.dip_sigma_t = fit.sigma_t;
    }
    return h;
}

} // namespace detail

// Scan against a mixed signal density (simplified coincidence model only:
// the two-photon overlap T' is defined for factorised pure states).
inline HomScan hom_scan(const SignalState& s, double beta_sq, const ReferenceField& ref, const ReducedDensity& g,
                        const std::vector<double>& taus)
{
    const SampledAmplitude u = ref.sample(g.axis);
    return detail::scan(
        s, beta_sq, taus, CoincidenceModel::simplified, [&](double tau) { return overlap_T(u, g, tau); },
        [](double) { return 0.0; });
}

inline HomScan hom_scan(const SignalState& s, double beta_sq, const SampledAmplitude& u, const SampledAmplitude& f,
                        const std::vector<double>& taus, CoincidenceModel model = CoincidenceModel::simplified)
{
    return detail::scan(
        s, beta_sq, taus, model, [&](double tau) { return overlap_T(u, f, tau); },
        [&](double tau) { return overlap_Tprime(u, f, tau); });
}

} // namespace pdc
