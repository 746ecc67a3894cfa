#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pdc/errors.hpp"

// Photon-number statistics of heralded PDC light and their measurement with
// a lossy, time-multiplexed click detector.

namespace pdc {

inline constexpr double tail_tolerance = 1e-6;

struct PhotonNumberDist {
    std::vector<double> probs; // index = photon number

    std::size_t nmax() const { return probs.empty() ? 0 : probs.size() - 1; }

    double moment(int order) const
    {
        double acc = 0.0;
        for (std::size_t n = 0; n < probs.size(); ++n)
            acc += std::pow(static_cast<double>(n), order) * probs[n];
        return acc;
    }
    double mean() const { return moment(1); }

    double operator[](std::size_t n) const { return n < probs.size() ? probs[n] : 0.0; }

    void validate() const
    {
        if (probs.empty())
            throw std::invalid_argument("photon-number distribution is empty");
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0))
                throw std::invalid_argument("photon-number probabilities must be non-negative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("photon-number probabilities must sum to one");
    }
};

namespace detail {

inline void normalize(std::vector<double>& v)
{
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    if (!(s > 0.0))
        throw NumericalError("cannot normalise an all-zero distribution");
    for (double& x : v)
        x /= s;
}

inline void check_tail(const std::vector<double>& v, std::size_t nmax)
{
    if (v.back() >= tail_tolerance)
        throw std::invalid_argument("photon-number cutoff nmax = " + std::to_string(nmax) +
                                    " too small: truncated tail exceeds 1e-6");
}

} // namespace detail

// rho_n = x^n (1 - x), x = |chi|^2
inline PhotonNumberDist thermal_dist(double gain_sq, std::size_t nmax)
{
    if (!(gain_sq >= 0.0 && gain_sq < 1.0))
        throw std::invalid_argument("gain_sq must lie in [0, 1)");
    std::vector<double> p(nmax + 1);
    double xn = 1.0;
    for (std::size_t n = 0; n <= nmax; ++n) {
        p[n] = xn * (1.0 - gain_sq);
        xn *= gain_sq;
    }
    detail::check_tail(p, nmax);
    detail::normalize(p);
    return {std::move(p)};
}

struct MultimodeSource {
    int n_modes = 1;
    double gain_sq = 0.0;            // |chi|^2 per mode
    double trigger_efficiency = 1.0; // eta_t

    void validate() const
    {
        if (n_modes < 1)
            throw std::invalid_argument("number of modes must be >= 1");
        if (!(gain_sq >= 0.0 && gain_sq < 1.0))
            throw std::invalid_argument("gain_sq must lie in [0, 1)");
        if (!(trigger_efficiency >= 0.0 && trigger_efficiency <= 1.0))
            throw std::invalid_argument("trigger efficiency must lie in [0, 1]");
    }
};

// M-fold convolution of identical thermal modes.
inline PhotonNumberDist multimode_dist(const MultimodeSource& source, std::size_t nmax)
{
    source.validate();
    // Unnormalised single-mode terms: the truncated convolution is then
    // exact for every n <= nmax.
    std::vector<double> single(nmax + 1);
    double xn = 1.0;
    for (std::size_t n = 0; n <= nmax; ++n) {
        single[n] = xn * (1.0 - source.gain_sq);
        xn *= source.gain_sq;
    }
    std::vector<double> acc = single;
    for (int m = 1; m < source.n_modes; ++m) {
        std::vector<double> next(nmax + 1, 0.0);
        for (std::size_t n = 0; n <= nmax; ++n)
            for (std::size_t k = 0; k <= n; ++k)
                next[n] += acc[k] * single[n - k];
        acc = std::move(next);
    }
    detail::check_tail(acc, nmax);
    detail::normalize(acc);
    return {std::move(acc)};
}

// n P_n / <n>: heralded statistics in the high-loss trigger limit.
inline PhotonNumberDist heralded_low_loss_limit(const PhotonNumberDist& joint)
{
    joint.validate();
    std::vector<double> p(joint.probs.size());
    for (std::size_t n = 0; n < p.size(); ++n)
        p[n] = static_cast<double>(n) * joint.probs[n];
    if (!(std::accumulate(p.begin(), p.end(), 0.0) > 0.0))
        throw std::invalid_argument("vacuum input never produces a trigger click");
    detail::normalize(p);
    return {std::move(p)};
}

// P_{n|click} = P_n [1 - (1 - eta_t)^n] / P_click
inline PhotonNumberDist heralded_dist(const PhotonNumberDist& joint, double eta_t)
{
    joint.validate();
    if (!(eta_t >= 0.0 && eta_t <= 1.0))
        throw std::invalid_argument("trigger efficiency must lie in [0, 1]");
    if (eta_t == 0.0)
        return heralded_low_loss_limit(joint);
    std::vector<double> p(joint.probs.size());
    p[0] = 0.0;
    for (std::size_t n = 1; n < p.size(); ++n)
        p[n] = joint.probs[n] * -std::expm1(static_cast<double>(n) * std::log1p(-eta_t));
    if (!(std::accumulate(p.begin(), p.end(), 0.0) > 0.0))
        throw std::invalid_argument("vacuum input never produces a trigger click");
    detail::normalize(p);
    return {std::move(p)};
}

// ---------------------------------------------------------------------------
// Detector model

enum class Readout {
    two_bin_tmd,   // 0 / 1 / 2 clicks behind a single 50:50 split
    photon_number, // loss only; outcomes are photon numbers 0..nmax
};

struct DetectorModel {
    double efficiency = 1.0;
    std::size_t nmax = 10;
    Readout readout = Readout::two_bin_tmd;

    void validate() const
    {
        if (!(efficiency >= 0.0 && efficiency <= 1.0))
            throw std::invalid_argument("detector efficiency must lie in [0, 1]");
    }

    std::size_t outcomes() const { return readout == Readout::two_bin_tmd ? 3 : nmax + 1; }
};

struct ClickDist {
    std::vector<double> probs;

    void validate() const
    {
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0))
                throw std::invalid_argument("click probabilities must be non-negative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("click probabilities must sum to one");
    }
};

// L(m, n) = binom(n, m) eta^m (1 - eta)^(n - m)
inline Eigen::MatrixXd loss_matrix(const DetectorModel& det)
{
    det.validate();
    const auto size = static_cast<Eigen::Index>(det.nmax + 1);
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(size, size);
    const double eta = det.efficiency;
    for (Eigen::Index n = 0; n < size; ++n) {
        double binom = 1.0;
        for (Eigen::Index m = 0; m <= n; ++m) {
            l(m, n) = binom * std::pow(eta, static_cast<double>(m)) * std::pow(1.0 - eta, static_cast<double>(n - m));
            binom = binom * static_cast<double>(n - m) / static_cast<double>(m + 1);
        }
    }
    return l;
}

// Two-bin TMD: n >= 1 photons all land in one bin with probability 2^(1-n).
inline Eigen::MatrixXd tmd_convolution_matrix(std::size_t nmax)
{
    if (nmax < 2)
        throw std::invalid_argument("two-bin TMD matrix needs nmax >= 2");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, static_cast<Eigen::Index>(nmax + 1));
    c(0, 0) = 1.0;
    for (std::size_t n = 1; n <= nmax; ++n) {
        const double one = std::ldexp(1.0, 1 - static_cast<int>(n));
        c(1, static_cast<Eigen::Index>(n)) = one;
        c(2, static_cast<Eigen::Index>(n)) = 1.0 - one;
    }
    return c;
}

// Loss first, then the detector's click convolution.
inline Eigen::MatrixXd response_matrix(const DetectorModel& det)
{
    const Eigen::MatrixXd l = loss_matrix(det);
    if (det.readout == Readout::photon_number)
        return l;
    return tmd_convolution_matrix(det.nmax) * l;
}

inline ClickDist forward_click_dist(const PhotonNumberDist& rho, const DetectorModel& det)
{
    rho.validate();
    DetectorModel d = det;
    d.nmax = std::max<std::size_t>(rho.nmax(), d.readout == Readout::two_bin_tmd ? 2 : 0);
    const Eigen::MatrixXd a = response_matrix(d);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(a.cols());
    for (std::size_t n = 0; n < rho.probs.size(); ++n)
        r(static_cast<Eigen::Index>(n)) = rho.probs[n];
    const Eigen::VectorXd p = a * r;
    return {std::vector<double>(p.data(), p.data() + p.size())};
}

// ---------------------------------------------------------------------------
// Maximum-likelihood inversion

struct MlOptions {
    int max_iter = 100000;
    double tol = 1e-10;
    bool record_likelihood = false;
};

struct MlResult {
    PhotonNumberDist rho;
    bool converged = false;
    int iterations = 0;
    double log_likelihood = 0.0;
    std::vector<double> likelihood_history; // per iteration, when requested
};

namespace detail {

inline double log_likelihood(const Eigen::VectorXd& p, const Eigen::VectorXd& q)
{
    double acc = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k)
        if (p(k) > 0.0)
            acc += p(k) * std::log(q(k));
    return acc;
}

} // namespace detail

// Expectation-maximisation on rho for the multinomial likelihood of the
// observed outcome frequencies under A = C L(eta). The iteration starts from
// the least-squares solution of A rho = p, clipped positive. For photon-number
// readout, a click vector shorter than nmax + 1 means the missing outcomes
// were never observed.
inline MlResult ml_invert(const ClickDist& clicks, const DetectorModel& det, const MlOptions& opts = {})
{
    clicks.validate();
    det.validate();
    if (!(det.efficiency > 0.0))
        throw std::invalid_argument("inversion needs a non-zero detector efficiency");
    const std::size_t outcomes = det.outcomes();
    if (clicks.probs.size() > outcomes ||
        (det.readout == Readout::two_bin_tmd && clicks.probs.size() != outcomes))
        throw std::invalid_argument("click distribution has " + std::to_string(clicks.probs.size()) +
                                    " outcomes, detector model expects " + std::to_string(outcomes));

    const Eigen::MatrixXd a = response_matrix(det);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(outcomes));
    for (std::size_t k = 0; k < clicks.probs.size(); ++k)
        p(static_cast<Eigen::Index>(k)) = clicks.probs[k];

    constexpr double floor = 1e-12;
    Eigen::VectorXd rho = a.completeOrthogonalDecomposition().solve(p);
    for (Eigen::Index n = 0; n < rho.size(); ++n)
        rho(n) = std::max(rho(n), floor);
    rho /= rho.sum();

    MlResult res;
    Eigen::VectorXd q = a * rho;
    for (int it = 1; it <= opts.max_iter; ++it) {
        Eigen::VectorXd ratio = Eigen::VectorXd::Zero(p.size());
        for (Eigen::Index k = 0; k < p.size(); ++k)
            if (p(k) > 0.0)
                ratio(k) = p(k) / q(k);
        Eigen::VectorXd next = rho.cwiseProduct(a.transpose() * ratio);
        next /= next.sum();
        const double step = (next - rho).cwiseAbs().maxCoeff();
        rho = std::move(next);
        q = a * rho;
        res.iterations = it;
        if (opts.record_likelihood)
            res.likelihood_history.push_back(detail::log_likelihood(p, q));
        if (step < opts.tol) {
            res.converged = true;
            break;
        }
    }
    res.log_likelihood = detail::log_likelihood(p, q);
    res.rho.probs.assign(rho.data(), rho.data() + rho.size());
    return res;
}

// ---------------------------------------------------------------------------
// Mode-count estimation from power sweeps

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LinearFit fit_line(const std::vector<std::pair<double, double>>& pts)
{
    if (pts.size() < 2)
        throw std::invalid_argument("linear fit needs at least two points");
    const double n = static_cast<double>(pts.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (!(sxx > 1e-14 * (mx * mx + 1e-300)))
        throw std::invalid_argument("singular fit: all powers are equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

struct ModeReduction {
    LinearFit unfiltered;
    LinearFit filtered;
    double slope_ratio = 1.0; // (M_unfiltered + 1) / (M_filtered + 1)
};

// Heralded mean ~ 1 + (M + 1) |chi|^2 with |chi|^2 proportional to pump power,
// so slopes compare mode numbers. Intercepts near 1 indicate the low-gain regime holds.
inline ModeReduction estimate_mode_reduction(const std::vector<std::pair<double, double>>& unfiltered,
                                             const std::vector<std::pair<double, double>>& filtered)
{
    for (const auto* series : {&unfiltered, &filtered})
        for (const auto& pt : *series)
            if (!(pt.first > 0.0))
                throw std::invalid_argument("pump powers must be positive");
    ModeReduction r;
    r.unfiltered = fit_line(unfiltered);
    r.filtered = fit_line(filtered);
    if (r.filtered.slope == 0.0)
        throw NumericalError("filtered series has zero slope");
    r.slope_ratio = r.unfiltered.slope / r.filtered.slope;
    return r;
}

// Unfiltered mode number implied by a slope ratio and a known filtered one.
inline double implied_modes(double slope_ratio, double filtered_modes)
{
    return slope_ratio * (filtered_modes + 1.0) - 1.0;
}

} // namespace pdc
