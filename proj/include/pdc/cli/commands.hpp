#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pdc/cli/csv.hpp"
#include "pdc/cli/scenario.hpp"
#include "pdc/hom_independent.hpp"
#include "pdc/jsa.hpp"
#include "pdc/photon_stats.hpp"
#include "pdc/twin_hom.hpp"
#include "pdc/units.hpp"

// One function per subcommand. Conversions between wavelength FWHM and
// internal rad/s amplitude widths happen here and only here.

namespace pdc::cli {

using D = Dimension;

struct CommandOutput {
    CsvTable table;
    int status = 0;          // 2 on numerical failure with partial output
    std::string diagnostic;  // one line, when status != 0
    std::vector<std::string> notes; // printed with --verbose
};

namespace detail {

inline double signal_wavelength(const Scenario& sc) { return sc.get_or("signal_wavelength", D::length, 796e-9); }
inline double pump_wavelength(const Scenario& sc) { return sc.get_or("pump_wavelength", D::length, 398e-9); }

// `key` in nm FWHM at `lambda` -> amplitude sigma in rad/s. "inf" means unbounded.
inline double width_at(const Scenario& sc, const std::string& key, double lambda)
{
    const double fwhm = sc.get(key, D::length);
    if (!(fwhm > 0.0))
        throw ConfigError(key, "width must be positive");
    return std::isinf(fwhm) ? fwhm : units::sigma_from_wavelength_fwhm(fwhm, lambda);
}

inline double to_nm(double m) { return m * 1e9; }
inline double to_ps(double s) { return s * 1e12; }

inline PdcModelParams build_params(const Scenario& sc, std::optional<double> pm_fwhm_override = std::nullopt)
{
    const double lambda_s = signal_wavelength(sc);
    const double lambda_p = pump_wavelength(sc);
    const double length = sc.get("length", D::length);
    if (!(length > 0.0))
        throw ConfigError("length", "must be positive");
    const double gamma = sc.get_or("gamma", D::dimensionless, default_gamma);
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ConfigError("gamma", "must lie in (0, 1]");
    const double sigma_pump = width_at(sc, "pump_fwhm", lambda_p);

    PdcModelParams p;
    if (sc.has("kappa_s") || sc.has("kappa_i")) {
        p.sigma_pump = sigma_pump;
        p.kappa_s = sc.get("kappa_s", D::dispersion);
        p.kappa_i = sc.get("kappa_i", D::dispersion);
        p.length = length;
        p.gamma = gamma;
        if (p.kappa_s == 0.0 && p.kappa_i == 0.0)
            throw ConfigError("kappa_s", "kappa_s and kappa_i cannot both be zero");
    } else {
        const double pm_sigma = pm_fwhm_override ? units::sigma_from_wavelength_fwhm(*pm_fwhm_override, lambda_s)
                                                 : width_at(sc, "pm_fwhm", lambda_s);
        const double theta = units::rad_to_deg(sc.get("theta", D::angle));
        p = params_from_pm_geometry(sigma_pump, pm_sigma, theta, length, gamma);
    }
    p.pump_wavelength = lambda_p;
    p.signal_wavelength = lambda_s;
    p.idler_wavelength = sc.get_or("idler_wavelength", D::length, lambda_s);
    return p;
}

inline SpectralFilter filter_from(const Scenario& sc, const std::string& prefix, bool required)
{
    const std::string key = prefix + "_fwhm";
    if (!sc.has(key)) {
        if (required)
            sc.raw(key); // throws "missing required key"
        return SpectralFilter::unity();
    }
    const double lambda = signal_wavelength(sc);
    SpectralFilter f;
    f.amplitude_width = width_at(sc, key, lambda);
    if (sc.has(prefix + "_center")) {
        const double offset = sc.get(prefix + "_center", D::length); // wavelength offset
        f.center_detuning = -units::omega_interval_from_wavelength(offset, lambda);
    }
    f.peak_transmission = sc.get_or(prefix + "_transmission", D::dimensionless, 1.0);
    if (!(f.peak_transmission >= 0.0 && f.peak_transmission <= 1.0))
        throw ConfigError(prefix + "_transmission", "must lie in [0, 1]");
    return f;
}

inline ReferenceField reference_from(const Scenario& sc, bool need_power)
{
    ReferenceField r;
    r.width = width_at(sc, "reference_fwhm", signal_wavelength(sc));
    r.mean_photons = need_power ? sc.get("beta_sq", D::dimensionless) : sc.get_or("beta_sq", D::dimensionless, 0.0);
    if (!(r.mean_photons >= 0.0))
        throw ConfigError("beta_sq", "must be non-negative");
    return r;
}

inline SignalState state_from(const Scenario& sc)
{
    SignalState s{sc.get("p0", D::dimensionless), sc.get("p1", D::dimensionless), sc.get("p2", D::dimensionless)};
    if (!(s.p0 >= 0.0 && s.p1 >= 0.0 && s.p2 >= 0.0))
        throw ConfigError("p0", "photon-number probabilities must be non-negative");
    const double sum = s.p0 + s.p1 + s.p2;
    // published tables are rounded; accept and renormalise small deviations
    if (std::abs(sum - 1.0) > 1e-3)
        throw ConfigError("p0", "p0 + p1 + p2 must equal one (got " + format_number(sum) + ")");
    s = {s.p0 / sum, s.p1 / sum, s.p2 / sum};
    return s;
}

inline GridAxes grid_for(const Scenario& sc, const GaussianJsa& jsa, const SpectralFilter& fs,
                         const SpectralFilter& fi, bool square = false)
{
    GridAxes axes = auto_axes(jsa, fs, fi, square);
    if (sc.grid_points)
        axes = resample_axes(axes, *sc.grid_points);
    return axes;
}

inline std::string ellipse_case(const CorrelationEllipse& e, const std::string& label, double lambda,
                                CsvTable& t)
{
    const double major = e.major_width.value_or(std::numeric_limits<double>::infinity());
    t.add({label, e.m11, e.m12, e.m22, e.tilt_deg, e.minor_width, major,
           to_nm(units::wavelength_fwhm_from_sigma(e.minor_width, lambda)),
           to_nm(units::wavelength_fwhm_from_sigma(major, lambda)),
           e.aspect_ratio.value_or(std::numeric_limits<double>::infinity())});
    return label;
}

} // namespace detail

// ---------------------------------------------------------------------------

inline CommandOutput cmd_pm_vs_length(const Scenario& sc)
{
    const PdcModelParams p = detail::build_params(sc);
    const auto lengths = sc.sweep("lengths", D::length);
    CommandOutput out;
    out.table.header = {"length_mm", "pm_fwhm_nm", "pm_sigma_radps"};
    for (const auto& pt : pm_width_vs_length(p, lengths)) {
        PdcModelParams q = p;
        q.length = pt.length;
        out.table.add({pt.length * 1e3, detail::to_nm(pt.fwhm_wavelength), pm_width(q)});
    }
    return out;
}

inline CommandOutput cmd_ellipse(const Scenario& sc)
{
    const PdcModelParams p = detail::build_params(sc);
    CommandOutput out;
    out.table.header = {"case",           "m11_s2",         "m12_s2",        "m22_s2",
                        "tilt_deg",       "minor_sigma_radps", "major_sigma_radps", "minor_fwhm_nm",
                        "major_fwhm_nm",  "aspect_ratio"};
    const CorrelationEllipse e = build_ellipse(p);
    detail::ellipse_case(e, "unfiltered", p.signal_wavelength, out.table);
    const SpectralFilter fs = detail::filter_from(sc, "signal_filter", false);
    const SpectralFilter fi = detail::filter_from(sc, "trigger_filter", false);
    if (sc.has("signal_filter_fwhm") || sc.has("trigger_filter_fwhm"))
        detail::ellipse_case(filtered_ellipse(jsa_from_params(p), fs, fi), "filtered", p.signal_wavelength, out.table);
    out.notes.push_back("pm_sigma_radps = " + format_number(pm_width(p)));
    return out;
}

// Filtered |phi|^2 on a grid.
inline CommandOutput cmd_filter(const Scenario& sc)
{
    const PdcModelParams p = detail::build_params(sc);
    const SpectralFilter fs = detail::filter_from(sc, "signal_filter", true);
    const SpectralFilter fi = detail::filter_from(sc, "trigger_filter", true);
    const GaussianJsa jsa = jsa_from_params(p);
    const SpectralGrid grid = apply_filters(evaluate_jsa(jsa, detail::grid_for(sc, jsa, fs, fi)), fs, fi);
    CommandOutput out;
    out.table.header = {"nu_s_radps", "nu_i_radps", "intensity"};
    for (std::size_t k = 0; k < grid.nu_s().size; ++k)
        for (std::size_t j = 0; j < grid.nu_i().size; ++j)
            out.table.add({grid.nu_s().at(k), grid.nu_i().at(j),
                           std::norm(grid.amplitude()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)))});
    const CorrelationEllipse e = filtered_ellipse(jsa, fs, fi);
    out.notes.push_back("filtered tilt_deg = " + format_number(e.tilt_deg) +
                        ", aspect_ratio = " + format_number(e.aspect_ratio.value_or(INFINITY)));
    return out;
}

inline CommandOutput cmd_twin_hom(const Scenario& sc)
{
    const double theta = units::rad_to_deg(sc.get("theta", D::angle));
    const double gamma = sc.get_or("gamma", D::dimensionless, default_gamma);
    const auto aspects = sc.sweep("aspect_ratios", D::dimensionless);
    const bool numeric = sc.flag_or("numeric", false);
    CommandOutput out;
    out.table.header = {"aspect_ratio", "o_spectral", "o_temporal", "o_total", "visibility"};
    if (numeric) {
        out.table.header.push_back("o_numeric");
        out.table.header.push_back("visibility_numeric");
    }
    for (double a : aspects) {
        if (!(a >= 1.0))
            throw ConfigError("aspect_ratios", "aspect ratios must be >= 1");
        const OverlapBreakdown o = closed_form_overlap(a, theta, gamma);
        std::vector<Cell> row{a, o.o_spectral, o.o_temporal, o.o_total, visibility_from_overlap(o.o_total)};
        if (numeric) {
            const GaussianJsa jsa = ellipse_jsa(theta, a, 1.0, gamma);
            const double on = overlap_numeric(
                evaluate_jsa(jsa, detail::grid_for(sc, jsa, SpectralFilter::unity(), SpectralFilter::unity(), true)));
            row.push_back(on);
            row.push_back(visibility_from_overlap(std::min(on, 1.0)));
        }
        out.table.add(std::move(row));
    }
    return out;
}

inline CommandOutput cmd_herald_stats(const Scenario& sc)
{
    MultimodeSource src;
    src.n_modes = static_cast<int>(sc.integer("modes"));
    src.trigger_efficiency = sc.get("trigger_efficiency", D::dimensionless);
    const std::size_t nmax = sc.integer_or("nmax", 40);
    const auto gains = sc.sweep("gain_sq", D::dimensionless);
    CommandOutput out;
    out.table.header = {"gain_sq", "mean_heralded", "mean_low_gain_approx", "p0", "p1", "p2", "p3"};
    for (double x : gains) {
        src.gain_sq = x;
        try {
            src.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("gain_sq", e.what());
        }
        const PhotonNumberDist h = heralded_dist(multimode_dist(src, nmax), src.trigger_efficiency);
        out.table.add({x, h.mean(), 1.0 + (src.n_modes + 1) * x, h[0], h[1], h[2], h[3]});
    }
    return out;
}

inline CommandOutput cmd_visibility_curve(const Scenario& sc)
{
    const SignalState s = detail::state_from(sc);
    const double t = sc.get_or("overlap", D::dimensionless, 1.0);
    const auto betas = sc.sweep("beta_sq", D::dimensionless);
    CommandOutput out;
    out.table.header = {"beta_sq", "visibility"};
    for (double b : betas) {
        if (!(b > 0.0))
            throw ConfigError("beta_sq", "values must be positive");
        out.table.add({b, visibility_vs_beta(s, t, b)});
    }
    if (s.p0 > 0.0) {
        out.notes.push_back("beta_sq_opt = " + format_number(beta_opt(s)));
        out.notes.push_back("max_visibility = " + format_number(max_visibility(s, t)));
    }
    return out;
}

inline CommandOutput cmd_fit_overlap(const Scenario& sc)
{
    const SignalState s = detail::state_from(sc);
    const CsvData data = read_csv(sc.path("data"), "data");
    const auto b = data.column({"beta_sq"}, "data");
    const auto v = data.column({"visibility"}, "data");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < b.size(); ++k)
        pts.emplace_back(b[k], v[k]);
    const OverlapFit fit = fit_overlap(pts, s);
    CommandOutput out;
    out.table.header = {"overlap", "std_error", "points", "max_visibility_fitted"};
    out.table.add({fit.t, fit.std_error, static_cast<double>(fit.points),
                   s.p0 > 0.0 ? max_visibility(s, fit.t) : fit.t});
    return out;
}

inline CommandOutput cmd_hom_scan(const Scenario& sc)
{
    const SignalState s = detail::state_from(sc);
    const ReferenceField ref = detail::reference_from(sc, true);
    const auto taus = sc.sweep("tau", D::time);
    const std::string signal = sc.text_or("signal", "pure");
    const std::string model = sc.text_or("model", "simplified");
    if (model != "simplified" && model != "full")
        throw ConfigError("model", "expected 'simplified' or 'full'");
    const auto cmodel = model == "full" ? CoincidenceModel::full : CoincidenceModel::simplified;

    HomScan scan;
    if (signal == "pure") {
        const double sigma_f = detail::width_at(sc, "signal_fwhm", detail::signal_wavelength(sc));
        const double half = 8.0 * std::max(sigma_f, ref.width);
        const double step = std::min(sigma_f, ref.width) / 16.0;
        const UniformAxis axis = make_centered_axis(0.0, half, sc.grid_points.value_or(
                                                                    static_cast<std::size_t>(2.0 * half / step) + 1));
        const ReferenceField f_field{1.0, 0.0, sigma_f};
        scan = hom_scan(s, ref.mean_photons, ref.sample(axis), f_field.sample(axis), taus, cmodel);
    } else if (signal == "pdc") {
        if (cmodel == CoincidenceModel::full)
            throw ConfigError("model", "the full model needs a pure signal (signal = pure)");
        const PdcModelParams p = detail::build_params(sc);
        const SpectralFilter fs = detail::filter_from(sc, "signal_filter", false);
        const bool heralded = sc.flag_or("heralded", true);
        const SpectralFilter fi = heralded ? detail::filter_from(sc, "trigger_filter", false) : SpectralFilter::unity();
        const GaussianJsa jsa = jsa_from_params(p);
        const ReducedDensity g = reduced_density(evaluate_jsa(jsa, detail::grid_for(sc, jsa, fs, fi)), fs, fi);
        // delays measured from the signal's group delay
        std::vector<double> shifted;
        for (double t : taus)
            shifted.push_back(t + dip_center(p));
        scan = hom_scan(s, ref.mean_photons, ref, g, shifted);
        scan.tau = taus;
        scan.dip_center -= dip_center(p);
    } else {
        throw ConfigError("signal", "expected 'pure' or 'pdc'");
    }
    CommandOutput out;
    out.table.header = {"tau_ps", "overlap", "coincidence"};
    for (std::size_t k = 0; k < scan.tau.size(); ++k)
        out.table.add({detail::to_ps(scan.tau[k]), scan.overlap[k], scan.coincidence[k]});
    out.notes.push_back("visibility = " + format_number(scan.visibility));
    out.notes.push_back("dip_sigma_t_ps = " + format_number(detail::to_ps(scan.dip_sigma_t)));
    out.notes.push_back("dip_center_ps = " + format_number(detail::to_ps(scan.dip_center)));
    return out;
}

inline CommandOutput cmd_dip_width(const Scenario& sc)
{
    const double lambda_s = detail::signal_wavelength(sc);
    const double sigma_pump = detail::width_at(sc, "pump_fwhm", detail::pump_wavelength(sc));
    const double sigma_ref = detail::width_at(sc, "reference_fwhm", lambda_s);
    const double sigma_filter = detail::width_at(sc, "signal_filter_fwhm", lambda_s);
    const double theta = units::rad_to_deg(sc.get("theta", D::angle));
    const auto pms = sc.sweep("pm_fwhm", D::length);
    CommandOutput out;
    out.table.header = {"pm_fwhm_nm", "sigma_t_ps", "dip_fwhm_ps"};
    for (double pm : pms) {
        if (!(pm > 0.0))
            throw ConfigError("pm_fwhm", "width must be positive");
        const double st = dip_width(sigma_pump, sigma_ref, sigma_filter, units::sigma_from_wavelength_fwhm(pm, lambda_s),
                                    theta);
        out.table.add({detail::to_nm(pm), detail::to_ps(st), detail::to_ps(units::dip_fwhm_from_sigma(st))});
    }
    return out;
}

// Maximal overlap with the reference for two- and three-fold detection,
// optionally swept over the phase-matching width.
inline CommandOutput cmd_tmax(const Scenario& sc)
{
    const double lambda_s = detail::signal_wavelength(sc);
    const SpectralFilter fs = detail::filter_from(sc, "signal_filter", true);
    const SpectralFilter fi = detail::filter_from(sc, "trigger_filter", true);
    const ReferenceField ref = detail::reference_from(sc, false);
    std::vector<std::optional<double>> pms;
    if (sc.has("pm_fwhm") || sc.has("pm_fwhm_min"))
        for (double pm : sc.sweep("pm_fwhm", D::length))
            pms.emplace_back(pm);
    else
        pms.emplace_back(std::nullopt); // kappa_s / kappa_i given directly
    CommandOutput out;
    out.table.header = {"pm_fwhm_nm",      "tmax_two_fold",    "tmax_three_fold", "purity_two_fold",
                        "purity_three_fold", "dip_sigma_t_ps", "dip_fwhm_ps"};
    for (const auto& pm : pms) {
        const PdcModelParams p = detail::build_params(sc, pm);
        const GaussianJsa jsa = jsa_from_params(p);
        // grid sized for the two-fold case (idler unfiltered), which is the wider one
        const SpectralGrid grid = evaluate_jsa(jsa, detail::grid_for(sc, jsa, fs, SpectralFilter::unity()));
        const ReducedDensity g2 = reduced_density(grid, fs, SpectralFilter::unity());
        const ReducedDensity g3 = reduced_density(grid, fs, fi);
        const double center = dip_center(p);
        const double sigma_t =
            dip_width(p.sigma_pump, ref.width, fs.amplitude_width, pm_width(p), build_ellipse(p).tilt_deg);
        out.table.add({detail::to_nm(units::wavelength_fwhm_from_sigma(pm_width(p), lambda_s)),
                       overlap_T(ref, g2, center), overlap_T(ref, g3, center), purity(g2), purity(g3),
                       detail::to_ps(sigma_t), detail::to_ps(units::dip_fwhm_from_sigma(sigma_t))});
    }
    return out;
}

inline CommandOutput cmd_invert(const Scenario& sc)
{
    DetectorModel det;
    det.efficiency = sc.get("efficiency", D::dimensionless);
    if (!(det.efficiency > 0.0 && det.efficiency <= 1.0))
        throw ConfigError("efficiency", "must lie in (0, 1]");
    det.nmax = sc.integer_or("nmax", 10);
    const std::string readout = sc.text_or("readout", "tmd2");
    if (readout == "tmd2") {
        det.readout = Readout::two_bin_tmd;
        if (det.nmax < 2)
            throw ConfigError("nmax", "two-bin TMD needs nmax >= 2");
    } else if (readout == "photon_number") {
        det.readout = Readout::photon_number;
    } else {
        throw ConfigError("readout", "expected 'tmd2' or 'photon_number'");
    }
    ClickDist clicks;
    if (sc.has("clicks")) {
        clicks.probs = sc.list("clicks", D::dimensionless);
    } else {
        const CsvData data = read_csv(sc.path("data"), "data");
        clicks.probs = data.column({"probability", "frequency"}, "data");
    }
    double sum = 0.0;
    for (double c : clicks.probs) {
        if (!(c >= 0.0))
            throw ConfigError("clicks", "probabilities must be non-negative");
        sum += c;
    }
    if (std::abs(sum - 1.0) > 1e-3)
        throw ConfigError("clicks", "probabilities must sum to one (got " + format_number(sum) + ")");
    for (double& c : clicks.probs)
        c /= sum;
    if (clicks.probs.size() > det.outcomes() ||
        (det.readout == Readout::two_bin_tmd && clicks.probs.size() != det.outcomes()))
        throw ConfigError("clicks", "expected " + std::to_string(det.outcomes()) + " outcome probabilities");

    MlOptions opts;
    opts.max_iter = static_cast<int>(sc.integer_or("max_iter", 100000));
    opts.tol = sc.get_or("tol", D::dimensionless, 1e-10);
    const MlResult res = ml_invert(clicks, det, opts);
    CommandOutput out;
    out.table.header = {"n", "probability"};
    for (std::size_t n = 0; n < res.rho.probs.size(); ++n)
        out.table.add({static_cast<double>(n), res.rho.probs[n]});
    out.notes.push_back("iterations = " + std::to_string(res.iterations));
    out.notes.push_back("log_likelihood = " + format_number(res.log_likelihood));
    if (!res.converged) {
        out.status = 2;
        out.diagnostic = "ML inversion did not converge within max_iter = " + std::to_string(opts.max_iter);
    }
    return out;
}

inline CommandOutput cmd_fidelity(const Scenario& sc)
{
    const double t = sc.get("overlap", D::dimensionless);
    const double rho1 = sc.get("rho1", D::dimensionless);
    if (!(t >= 0.0 && t <= 1.0))
        throw ConfigError("overlap", "must lie in [0, 1]");
    if (!(rho1 >= 0.0 && rho1 <= 1.0))
        throw ConfigError("rho1", "must lie in [0, 1]");
    const FidelityResult f = fidelity(t, rho1);
    CommandOutput out;
    out.table.header = {"overlap", "rho1", "fidelity"};
    out.table.add({f.spectral_overlap, f.one_photon, f.fidelity});
    return out;
}

inline CommandOutput cmd_mode_reduction(const Scenario& sc)
{
    auto series = [&](const std::string& key) {
        const CsvData d = read_csv(sc.path(key), key);
        const auto x = d.column({"power", "gain_sq"}, key);
        const auto y = d.column({"mean", "mean_heralded"}, key);
        std::vector<std::pair<double, double>> pts;
        for (std::size_t k = 0; k < x.size(); ++k)
            pts.emplace_back(x[k], y[k]);
        return pts;
    };
    const ModeReduction r = estimate_mode_reduction(series("unfiltered_data"), series("filtered_data"));
    CommandOutput out;
    out.table.header = {"slope_unfiltered", "intercept_unfiltered", "slope_filtered", "intercept_filtered",
                        "slope_ratio"};
    std::vector<Cell> row{r.unfiltered.slope, r.unfiltered.intercept, r.filtered.slope, r.filtered.intercept,
                          r.slope_ratio};
    if (sc.has("filtered_modes")) {
        const double mf = sc.get("filtered_modes", D::dimensionless);
        const double mu = implied_modes(r.slope_ratio, mf);
        out.table.header.push_back("modes_unfiltered");
        out.table.header.push_back("mode_reduction");
        row.push_back(mu);
        row.push_back(mu / mf);
    }
    out.table.add(std::move(row));
    return out;
}

using CommandFn = std::function<CommandOutput(const Scenario&)>;

inline const std::map<std::string, CommandFn>& commands()
{
    static const std::map<std::string, CommandFn> table = {
        {"pm-vs-length", cmd_pm_vs_length},
        {"ellipse", cmd_ellipse},
        {"filter", cmd_filter},
        {"twin-hom", cmd_twin_hom},
        {"herald-stats", cmd_herald_stats},
        {"visibility-curve", cmd_visibility_curve},
        {"fit-overlap", cmd_fit_overlap},
        {"hom-scan", cmd_hom_scan},
        {"dip-width", cmd_dip_width},
        {"tmax", cmd_tmax},
        {"invert", cmd_invert},
        {"fidelity", cmd_fidelity},
        {"mode-reduction", cmd_mode_reduction},
    };
    return table;
}

} // namespace pdc::cli
