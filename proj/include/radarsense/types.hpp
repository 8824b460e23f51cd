#ifndef RADARSENSE_TYPES_HPP
#define RADARSENSE_TYPES_HPP

#include <complex>

#include <Eigen/Dense>

namespace radarsense {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

}  // namespace radarsense

#endif  // RADARSENSE_TYPES_HPP
