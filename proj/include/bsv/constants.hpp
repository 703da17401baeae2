#pragma once

#include <numbers>

namespace bsv {

inline constexpr double speed_of_light = 299'792'458.0;  // m/s
inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Gaussian exp(-4 ln2 x^2 / fwhm^2): sigma = fwhm / (2 sqrt(2 ln 2))
inline constexpr double fwhm_to_sigma = 0.42466090014400953;

inline double lambda_to_omega(double lambda_m) { return two_pi * speed_of_light / lambda_m; }
inline double omega_to_lambda(double omega) { return two_pi * speed_of_light / omega; }

}  // namespace bsv
