#include "fcr/dimensioning.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "fcr/errors.hpp"
#include "fcr/report.hpp"

namespace fcr {

void SafetyTarget::validate() const {
    if (!(max_exceedance > 0.0 && max_exceedance < 1.0)) {
        throw ArgumentError(fmt::format("safety target: max exceedance must lie in (0, 1) (got {})", max_exceedance));
    }
}

namespace {

constexpr int kPreGridPoints = 9;
constexpr int kFallbackGridPoints = 1001;

}  // namespace

RequiredRn solve_required_rn(double sigma, double x_d, const SafetyTarget& target, const DimensioningOptions& opts) {
    target.validate();
    if (!(sigma > 0.0)) throw DegenerateParameterError(fmt::format("required_rn: sigma must be > 0 (got {})", sigma));
    if (!(x_d >= 0.0)) throw ArgumentError("required_rn: x_d must be >= 0");
    if (!(opts.r_max > 0.0) || !(opts.tolerance > 0.0)) throw ArgumentError("required_rn: bad options");

    RequiredRn out;
    auto excess = [&](double r_n) {
        ++out.evaluations;
        if (r_n + x_d == 0.0) return 1.0;  // no restoring force: never stationary
        return exceedance(ReserveConfig{r_n, x_d, sigma}, opts.quadrature_tol).p_outside_normal_band;
    };
    const double goal = target.max_exceedance;

    std::vector<double> grid(kPreGridPoints);
    std::vector<double> values(kPreGridPoints);
    for (int k = 0; k < kPreGridPoints; ++k) {
        grid[k] = opts.r_max * k / (kPreGridPoints - 1);
        values[k] = excess(grid[k]);
    }
    if (values.front() <= goal) return out;
    if (values.back() > goal) {
        throw BracketError(fmt::format("required_rn: even r_n = {} GW gives exceedance {} > {} (sigma {})",
                                       opts.r_max, values.back(), goal, sigma),
                           values.back(), values.front());
    }

    bool monotone = true;
    for (int k = 1; k < kPreGridPoints; ++k) monotone = monotone && values[k] <= values[k - 1];
    if (!monotone) {
        out.used_fallback = true;
        grid.resize(kFallbackGridPoints);
        values.resize(kFallbackGridPoints);
        for (int k = 0; k < kFallbackGridPoints; ++k) {
            grid[k] = opts.r_max * k / (kFallbackGridPoints - 1);
            values[k] = excess(grid[k]);
        }
    }

    std::size_t first = 1;
    while (values[first] > goal) ++first;
    double lo = grid[first - 1];  // excess(lo) > goal
    double hi = grid[first];      // excess(hi) <= goal
    while (hi - lo > opts.tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) <= goal) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    out.r_n = hi;
    return out;
}

double required_rn(double sigma, double x_d, const SafetyTarget& target, const DimensioningOptions& opts) {
    return solve_required_rn(sigma, x_d, target, opts).r_n;
}

std::vector<RequiredRnCell> required_rn_curve(const std::vector<double>& sigma_grid, double x_d,
                                              const std::vector<SafetyTarget>& targets,
                                              const DimensioningOptions& opts) {
    if (sigma_grid.empty() || targets.empty()) throw ArgumentError("required_rn_curve: empty grid");
    std::vector<RequiredRnCell> cells;
    cells.reserve(sigma_grid.size() * targets.size());
    for (double sigma : sigma_grid) {
        for (const auto& t : targets) {
            RequiredRnCell cell{sigma, t.max_exceedance, std::nullopt, {}};
            try {
                cell.r_n = required_rn(sigma, x_d, t, opts);
            } catch (const Error& e) {
                cell.error = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

void write_required_rn_csv(std::ostream& os, const std::vector<RequiredRnCell>& cells) {
    os << "sigma,target,required_rn_gw\n";
    for (const auto& c : cells) {
        os << format_real(c.sigma) << ',' << format_real(c.target) << ','
           << (c.r_n ? format_real(*c.r_n) : std::string{}) << '\n';
    }
}

}  // namespace fcr
