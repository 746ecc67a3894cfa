#pragma once

#include <cmath>
#include <numbers>

// Width conventions used throughout the library.
//
// Every spectral width handled internally is the amplitude 1/e half-width
// sigma of exp(-nu^2 / sigma^2), nu being an angular-frequency detuning in
// rad/s. The intensity profile is then exp(-2 nu^2 / sigma^2), whose FWHM is
// sigma * sqrt(2 ln 2). Conversions to and from wavelength FWHM (what a
// spectrometer or filter data sheet reports) live here and nowhere else.

namespace pdc::units {

inline constexpr double speed_of_light = 299792458.0; // m/s
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline const double fwhm_per_sigma = std::sqrt(2.0 * std::numbers::ln2);

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Intensity FWHM (rad/s) <-> amplitude half-width sigma (rad/s).
inline double sigma_from_fwhm(double fwhm_omega) { return fwhm_omega / fwhm_per_sigma; }
inline double fwhm_from_sigma(double sigma) { return sigma * fwhm_per_sigma; }

// Small-bandwidth mapping between a wavelength interval and an angular
// frequency interval at the given centre wavelength: d(omega) = 2 pi c d(lambda) / lambda^2.
inline double omega_interval_from_wavelength(double d_lambda, double lambda)
{
    return two_pi * speed_of_light * d_lambda / (lambda * lambda);
}

inline double wavelength_interval_from_omega(double d_omega, double lambda)
{
    return lambda * lambda * d_omega / (two_pi * speed_of_light);
}

// Wavelength FWHM (m) at centre `lambda` (m) -> amplitude sigma (rad/s).
inline double sigma_from_wavelength_fwhm(double fwhm_lambda, double lambda)
{
    return sigma_from_fwhm(omega_interval_from_wavelength(fwhm_lambda, lambda));
}

// Amplitude sigma (rad/s) -> intensity FWHM in wavelength (m) at `lambda`.
inline double wavelength_fwhm_from_sigma(double sigma, double lambda)
{
    return wavelength_interval_from_omega(fwhm_from_sigma(sigma), lambda);
}

// FWHM of a Gaussian dip exp(-tau^2 / (2 sigma_t^2)).
inline double dip_fwhm_from_sigma(double sigma_t)
{
    return 2.0 * std::sqrt(2.0 * std::numbers::ln2) * sigma_t;
}

} // namespace pdc::units
