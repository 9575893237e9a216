#include "fcr/report.hpp"

#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

namespace fcr {

std::string format_real(double v) { return fmt::format("{:.12g}", v); }

nlohmann::json json_real(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::strtod(format_real(v).c_str(), nullptr);
}

}  // namespace fcr
