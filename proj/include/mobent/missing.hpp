#pragma once

#include <cmath>
#include <limits>

namespace mobent {

/// Sentinel for absent observations (empty windows, undefined kinematics).
/// Serialized as an empty CSV field.
inline constexpr double missing_value = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

} // namespace mobent
