#include "fcr/drift_model.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "fcr/errors.hpp"

namespace fcr {

void ReserveConfig::validate() const {
    if (!std::isfinite(r_n) || !std::isfinite(x_d) || !std::isfinite(sigma)) {
        throw ArgumentError("reserve config: parameters must be finite");
    }
    if (r_n < 0.0) throw ArgumentError(fmt::format("reserve config: r_n must be >= 0 (got {})", r_n));
    if (x_d < 0.0) throw ArgumentError(fmt::format("reserve config: x_d must be >= 0 (got {})", x_d));
    if (sigma <= 0.0) {
        throw DegenerateParameterError(fmt::format("reserve config: sigma must be > 0 (got {})", sigma));
    }
}

int interval_of(double f) noexcept {
    if (f < -0.5) return 1;
    if (f < -0.1) return 2;
    if (f < 0.0) return 3;
    if (f <= 0.1) return 4;
    if (f <= 0.5) return 5;
    return 6;
}

double alpha(const ReserveConfig& cfg, double f) noexcept {
    const double r = cfg.r_n;
    const double x = cfg.x_d;
    switch (interval_of(f)) {
        case 1:
        case 6:
            return r + x;
        case 2:
            return r - 0.25 * x - 2.5 * x * f;
        case 3:
            return -10.0 * r * f;
        case 4:
            return 10.0 * r * f;
        default:
            return r - 0.25 * x + 2.5 * x * f;
    }
}

double drift(const ReserveConfig& cfg, double f) noexcept { return -alpha(cfg, f) * f; }

}  // namespace fcr
