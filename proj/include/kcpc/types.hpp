#pragma once

#include <complex>
#include <numbers>

namespace kcpc {

using cd = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace kcpc
