#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcr/drift_model.hpp"

namespace fcr {

/// Euler-Maruyama run of dF = -alpha(F) F dt + sigma dB.
struct SimulationConfig {
    ReserveConfig cfg{};
    double dt = 0.01;
    std::uint64_t n_steps = 1'000'000;
    std::uint64_t burn_in_steps = 100'000;
    std::uint64_t seed = 0;
    double f0 = 0.0;

    /// sigma = 0 is accepted here (deterministic limit), unlike the
    /// stationary solver.
    void validate() const;

    /// Set when dt * alpha(+-0.5) >= 0.1, i.e. the step is coarse relative to
    /// the fastest reversal rate inside the FCR-D band.
    std::optional<std::string> step_warning() const;
};

/// Interval occupancy of a trajectory after burn-in.
///
/// Standard errors use batch means over (at most) 100 contiguous batches:
/// se_j = sqrt(var(batch means of 1{f in I_j}) / n_batches), which equals
/// sqrt(frac (1 - frac) / n_eff) with n_eff = n / (2 tau_int). n_eff is
/// capped at n, so errors are never below the i.i.d. binomial value.
struct OccupancyEstimate {
    std::array<std::uint64_t, 6> counts{};
    std::array<double, 6> fractions{};
    std::array<double, 6> std_errors{};
    std::array<double, 6> n_effective{};
    std::uint64_t n_samples = 0;
    double mean = 0.0;
    double mean_std_error = 0.0;
};

/// Streaming accumulator behind occupancy(); lets long runs avoid storing
/// the trajectory.
class OccupancyAccumulator {
public:
    explicit OccupancyAccumulator(std::uint64_t expected_samples, std::size_t max_batches = 100);

    void push(double f);
    OccupancyEstimate finish() const;

private:
    struct Batch {
        std::array<std::uint64_t, 6> counts{};
        double sum = 0.0;
    };

    std::uint64_t batch_size_;
    std::size_t n_batches_;
    std::uint64_t seen_ = 0;
    std::array<std::uint64_t, 6> counts_{};
    double sum_ = 0.0;
    std::vector<Batch> batches_;
};

/// Trajectory f_0..f_n (length n_steps + 1). Bit-identical for equal configs.
std::vector<double> simulate(const SimulationConfig& sim);

/// Occupancy over f_k for k > burn_in_steps. Throws DataError if nothing is left.
OccupancyEstimate occupancy(std::span<const double> trajectory, std::uint64_t burn_in_steps);

/// simulate() + occupancy() without materializing the trajectory.
OccupancyEstimate simulate_occupancy(const SimulationConfig& sim);

/// CSV dump with header `step,time,f_hz`; every `stride`-th step is written.
void write_trajectory_csv(std::ostream& os, std::span<const double> trajectory, double dt,
                          std::uint64_t stride = 1);

}  // namespace fcr
