#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fcr/stationary.hpp"

namespace fcr {

/// Maximum long-run fraction of time outside the +-0.1 Hz band
/// (0.02 for the 98% safety level).
struct SafetyTarget {
    double max_exceedance = 0.02;

    void validate() const;
};

struct DimensioningOptions {
    double r_max = 100.0;     // GW, bracket cap
    double tolerance = 1e-4;  // GW, absolute
    double quadrature_tol = kDefaultQuadratureTol;
};

struct RequiredRn {
    double r_n = 0.0;
    bool used_fallback = false;  // pre-grid was not monotone; grid scan used
    int evaluations = 0;
};

/// Smallest r_n >= 0 whose exceedance (2 p2 + 2 p1) meets the target.
/// Throws BracketError if r_max does not suffice.
RequiredRn solve_required_rn(double sigma, double x_d, const SafetyTarget& target,
                             const DimensioningOptions& opts = {});

double required_rn(double sigma, double x_d, const SafetyTarget& target, const DimensioningOptions& opts = {});

struct RequiredRnCell {
    double sigma = 0.0;
    double target = 0.0;
    std::optional<double> r_n;  // empty when the cell failed
    std::string error;
};

/// Cells in row-major order (sigma outer, target inner). Per-cell failures
/// are recorded, not thrown.
std::vector<RequiredRnCell> required_rn_curve(const std::vector<double>& sigma_grid, double x_d,
                                              const std::vector<SafetyTarget>& targets,
                                              const DimensioningOptions& opts = {});

/// `sigma,target,required_rn_gw`; failed cells leave the last field empty.
void write_required_rn_csv(std::ostream& os, const std::vector<RequiredRnCell>& cells);

}  // namespace fcr
