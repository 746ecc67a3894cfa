#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <numeric>
#include <string>
#include <vector>

#include "pdc/hom_independent.hpp"
#include "pdc/photon_stats.hpp"
#include "pdc/twin_hom.hpp"

using namespace pdc;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Verdict()> check;
};

std::string fmt(const char* f, auto... v)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, v...);
    return buf;
}

const double nm_at_signal = units::sigma_from_wavelength_fwhm(1e-9, 796e-9);
const SignalState two_fold{0.997896, 0.002101, 0.000003};
const SignalState three_fold{0.94920, 0.05065, 0.00015};

PdcModelParams source_params()
{
    return params_from_pm_geometry(units::sigma_from_wavelength_fwhm(2.5e-9, 398e-9), 0.5 * nm_at_signal, 54.7,
                                   2.1e-3);
}

Verdict max_visibilities()
{
    const double v2 = max_visibility(two_fold, 1.0), v3 = max_visibility(three_fold, 1.0);
    return {std::abs(v2 - 0.46) <= 0.005 && std::abs(v3 - 0.75) <= 0.005,
            fmt("two-fold %.4f, three-fold %.4f", v2, v3)};
}

Verdict headline_fidelity()
{
    const double f = fidelity(0.65, 0.931).fidelity;
    return {std::abs(f - 0.78) <= 0.01, fmt("F = %.4f", f)};
}

Verdict table_inversion()
{
    const DetectorModel det{0.048, 2, Readout::photon_number};
    const MlResult r = ml_invert(ClickDist{{0.94920, 0.05065, 0.00015}}, det);
    const double r1 = 100.0 * r.rho[1], r2 = 100.0 * r.rho[2];
    return {r.converged && r1 >= 92.5 && r1 <= 93.7 && r2 >= 6.0 && r2 <= 7.2,
            fmt("rho1 = %.3f %%, rho2 = %.3f %%", r1, r2)};
}

Verdict twin_hom_chain()
{
    const double v95 = visibility_from_overlap(closed_form_overlap(95.0, 54.7).o_total);
    const double v17 = visibility_from_overlap(closed_form_overlap(1.7, 54.7).o_total);
    return {std::abs(v95 - 0.34) <= 0.02 && v17 >= 0.78 && v17 <= 0.86, fmt("V(95) = %.4f, V(1.7) = %.4f", v95, v17)};
}

Verdict overlap_equivalence()
{
    double worst = 0.0;
    for (double a : {1.0, 1.7, 4.2, 10.0, 20.0})
        for (double t : {45.0, 54.7, 60.0}) {
            const GaussianJsa jsa = ellipse_jsa(t, a, 1.0);
            const SpectralGrid grid =
                evaluate_jsa(jsa, auto_axes(jsa, SpectralFilter::unity(), SpectralFilter::unity(), true));
            worst = std::max(worst, std::abs(overlap_numeric(grid) - closed_form_overlap(a, t).o_total));
        }
    return {worst < 1e-3, fmt("max |delta| = %.2e", worst)};
}

Verdict dip_width_check()
{
    const PdcModelParams p = source_params();
    const GaussianJsa jsa = jsa_from_params(p);
    const SpectralFilter fs{0.0, nm_at_signal, 1.0};
    const ReferenceField ref{0.01, 0.0, nm_at_signal};
    const double st = dip_width(p.sigma_pump, ref.width, fs.amplitude_width, pm_width(p), 54.7);
    const double fwhm = units::dip_fwhm_from_sigma(st);
    bool pass = std::abs(fwhm - 2.0e-12) <= 0.3e-12;
    double worst = 0.0;
    for (bool heralded : {false, true}) {
        const SpectralFilter fi = heralded ? fs : SpectralFilter::unity();
        const ReducedDensity g = reduced_density(evaluate_jsa(jsa, auto_axes(jsa, fs, fi)), fs, fi);
        std::vector<double> taus;
        for (int k = -20; k <= 20; ++k)
            taus.push_back(dip_center(p) + 0.2 * k * st);
        const HomScan scan = hom_scan(heralded ? three_fold : two_fold, ref.mean_photons, ref, g, taus);
        worst = std::max(worst, std::abs(scan.dip_sigma_t / st - 1.0));
    }
    pass = pass && worst < 0.02;
    return {pass, fmt("dip FWHM %.3f ps, scan fit deviation %.2e", fwhm * 1e12, worst)};
}

Verdict statistics_round_trip()
{
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> eta(0.03, 0.5);
    std::gamma_distribution<double> g(1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const DetectorModel det{eta(rng), 6, Readout::photon_number};
        std::vector<double> p(7);
        for (std::size_t n = 0; n < p.size(); ++n)
            p[n] = g(rng) * std::pow(0.5, static_cast<double>(n));
        const double s = std::accumulate(p.begin(), p.end(), 0.0);
        for (double& v : p)
            v /= s;
        const PhotonNumberDist truth{p};
        const MlResult r = ml_invert(forward_click_dist(truth, det), det);
        for (std::size_t n = 0; n < p.size(); ++n)
            worst = std::max(worst, std::abs(r.rho[n] - truth[n]));
    }
    return {worst < 1e-3, fmt("max component error %.2e over 50 states", worst)};
}

Verdict mode_count()
{
    const double eta_t = 0.1;
    auto series = [&](int m) {
        std::vector<std::pair<double, double>> pts;
        for (double x : {0.01, 0.02, 0.03, 0.04, 0.05})
            pts.emplace_back(x, heralded_dist(multimode_dist({m, x, eta_t}, 80), eta_t).mean());
        return pts;
    };
    const ModeReduction r = estimate_mode_reduction(series(31), series(1));
    const double m = implied_modes(r.slope_ratio, 1.0);
    return {std::abs(m / 31.0 - 1.0) <= 0.05, fmt("slope ratio %.3f, implied modes %.2f", r.slope_ratio, m)};
}

Verdict heralding_monotonicity()
{
    const PdcModelParams p = source_params();
    const GaussianJsa jsa = jsa_from_params(p);
    const SpectralFilter fs{0.0, nm_at_signal, 1.0};
    const ReferenceField ref{0.01, 0.0, nm_at_signal};
    const SpectralGrid grid = evaluate_jsa(jsa, auto_axes(jsa, fs, SpectralFilter::unity()));
    const double c = dip_center(p);
    const double two = tmax_prediction(grid, fs, fs, ref, false, c);
    const double three = tmax_prediction(grid, fs, fs, ref, true, c);
    bool monotone = true;
    double prev = 0.0;
    std::string purities;
    for (double w : {2.5, 2.0, 1.5, 1.0}) {
        const double pur = purity(reduced_density(grid, fs, SpectralFilter{0.0, w * nm_at_signal, 1.0}));
        monotone = monotone && pur > prev;
        prev = pur;
        purities += fmt(" %.3f", pur);
    }
    return {three > two && monotone, fmt("T^max two-fold %.3f, three-fold %.3f; purity 2.5->1 nm:%s", two, three,
                                         purities.c_str())};
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria = {
        {1, "maximum visibility from click statistics", 1.0, max_visibilities},
        {2, "heralded single-photon fidelity", 1.0, headline_fidelity},
        {3, "maximum-likelihood inversion of three-fold clicks", 5.0, table_inversion},
        {4, "twin-HOM visibility chain", 1.0, twin_hom_chain},
        {5, "numeric vs closed-form swap overlap", 10.0, overlap_equivalence},
        {6, "HOM dip width", 10.0, dip_width_check},
        {7, "click statistics round trip", 30.0, statistics_round_trip},
        {8, "mode-count estimation from slopes", 5.0, mode_count},
        {9, "heralding improves overlap and purity", 30.0, heralding_monotonicity},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (dt > c.budget_s) {
            v.pass = false;
            v.detail += fmt(" (over %.0f s budget)", c.budget_s);
        }
        std::printf("%s %d %s: %s [%.3f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), v.detail.c_str(), dt);
        failures += v.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
