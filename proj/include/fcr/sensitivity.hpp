#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "fcr/calibration.hpp"
#include "fcr/policy.hpp"

namespace fcr {

enum class PerturbationKind { ThreePoint, Gaussian };

/// How the Gaussian magnitude p enters: psi = 1 + sqrt(p) Z (Variance, the
/// N(1, p) law) or psi = 1 + p Z (StdDev).
enum class GaussianScale { StdDev, Variance };

std::string_view to_string(PerturbationKind kind) noexcept;
PerturbationKind parse_perturbation_kind(std::string_view text);
std::string_view to_string(GaussianScale scale) noexcept;
GaussianScale parse_gaussian_scale(std::string_view text);

inline constexpr double kGaussianFactorFloor = 1e-3;

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::ThreePoint;
    double p = 0.0;
    std::uint64_t seed = 0;
    int n_repetitions = 20;
    GaussianScale gaussian_scale = GaussianScale::Variance;

    void validate() const;
};

/// H i.i.d. factors for repetition `rep`. ThreePoint: 1-p, 1, 1+p with equal
/// probability. Gaussian: max(1 + scale Z, 1e-3). The stream depends on
/// (seed, kind, rep) only, so every p on a grid sees the same draws.
std::vector<double> sample_factors(const PerturbationSpec& spec, std::size_t H, int rep = 0);

struct SweepPoint {
    double p = 0.0;
    PolicyKind policy = PolicyKind::Static;
    double delta_p2_mean = 0.0;
    double delta_p2_min = 0.0;
    double delta_p2_max = 0.0;
    std::vector<double> delta_p2;  // one per repetition
};

struct SweepOptions {
    std::vector<double> p_grid{0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
    EvaluationOptions evaluation;
};

/// For each p and policy: allocate on psi * sigma (eta from the perturbed
/// series, sigma_bar held at the calibrated value), evaluate p2 on the true
/// sigma, and record overall Delta p2 against Static on the true series.
/// `spec.p` is ignored in favour of the grid. Points are ordered p outer,
/// policy inner.
std::vector<SweepPoint> sweep(const HourlyVolatilitySeries& series, double x_d,
                              const std::vector<DimensioningPolicy>& policies, const PerturbationSpec& spec,
                              const SweepOptions& opts = {});

/// `p,policy,delta_p2_mean,delta_p2_min,delta_p2_max`
void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points);

}  // namespace fcr
