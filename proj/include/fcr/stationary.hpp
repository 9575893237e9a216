#pragma once

#include <array>

#include "fcr/drift_model.hpp"

namespace fcr {

inline constexpr double kDefaultQuadratureTol = 1e-12;
inline constexpr double kMinutesPerYear = 525600.0;

/// Normalizing integrals of the three distinct component densities.
///
///   K1 = int_{-inf}^{-0.5} exp(-y^2 (r+x)/s^2) dy
///   K2 = int_{-0.5}^{-0.1} exp(-y^2 (4r-x)/(4 s^2) + y^3 5x/(3 s^2)) dy
///   K3 = int_{-0.1}^{0}    exp(20 y^3 r/(3 s^2)) dy
///
/// At realistic sigma the exponents reach O(10^3), so the constants are kept
/// as logarithms; the linear accessors may underflow to 0 (or be +inf for K1
/// when r + x = 0).
struct Normalizers {
    double log_k1 = 0.0;
    double log_k2 = 0.0;
    double log_k3 = 0.0;
    // log K1 + (r+x)/(4 s^2) and log K2 - phi2(-0.1), i.e. the logs with the
    // integrand value at the inner endpoint removed. The weights are formed
    // from these so that large exponents cancel analytically.
    double log_k1_rel = 0.0;
    double log_k2_rel = 0.0;

    double k1() const;
    double k2() const;
    double k3() const;
};

/// Log of the integrands above (the unnormalized component log-densities on
/// the left half-line). Exposed for tests and the density evaluation.
double log_component1(const ReserveConfig& cfg, double y) noexcept;
double log_component2(const ReserveConfig& cfg, double y) noexcept;
double log_component3(const ReserveConfig& cfg, double y) noexcept;

/// Computes log K1..K3 by adaptive Gauss-Kronrod quadrature with the maximum
/// of each integrand factored out. Throws QuadratureError if the relative
/// tolerance is not reached, DegenerateParameterError on sigma <= 0.
Normalizers normalizers(const ReserveConfig& cfg, double quadrature_tol = kDefaultQuadratureTol);

/// Stationary law of the frequency diffusion: interval probabilities p1..p6
/// and the piecewise density. Immutable once built.
class StationaryDistribution {
public:
    const ReserveConfig& config() const noexcept { return cfg_; }
    const Normalizers& normalizers() const noexcept { return norm_; }
    double quadrature_tol() const noexcept { return tol_; }

    /// p_j for j = 1..6.
    double p(int j) const;
    double log_p(int j) const;
    const std::array<double, 6>& probabilities() const noexcept { return p_; }

    /// tau(f) = p_j tau_j(f) for f in I_j.
    double density(double f) const;
    double log_density(double f) const;

private:
    friend StationaryDistribution interval_probabilities(const ReserveConfig&, double);

    ReserveConfig cfg_{};
    Normalizers norm_{};
    double tol_ = kDefaultQuadratureTol;
    std::array<double, 6> p_{};
    std::array<double, 6> log_p_{};
};

/// Closed-form interval probabilities. Throws DegenerateParameterError when
/// sigma <= 0 or r_n + x_d == 0 (no mean reversion outside the normal band).
StationaryDistribution interval_probabilities(const ReserveConfig& cfg,
                                              double quadrature_tol = kDefaultQuadratureTol);

struct ExceedanceReport {
    double p_outside_normal_band = 0.0;  // 2 p2 + 2 p1
    double p2 = 0.0;
    double p1 = 0.0;
    double minutes_per_year = 0.0;
};

ExceedanceReport exceedance(const StationaryDistribution& dist);
ExceedanceReport exceedance(const ReserveConfig& cfg, double quadrature_tol = kDefaultQuadratureTol);

}  // namespace fcr
