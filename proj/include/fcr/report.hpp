#pragma once

#include <string>

#include "json.hpp"

namespace fcr {

/// Fixed float rendering for every artifact: 12 significant digits, "%g" style.
std::string format_real(double v);

/// JSON number rounded to 12 significant digits (null for non-finite values),
/// so JSON and CSV outputs carry the same precision.
nlohmann::json json_real(double v);

}  // namespace fcr
