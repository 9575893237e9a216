#include "fcr/simulator.hpp"

#include <cmath>
#include <ostream>

#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>

#include "fcr/errors.hpp"
#include "fcr/random.hpp"
#include "fcr/report.hpp"

namespace fcr {

void SimulationConfig::validate() const {
    if (!std::isfinite(cfg.r_n) || !std::isfinite(cfg.x_d) || !std::isfinite(cfg.sigma) || cfg.r_n < 0.0 ||
        cfg.x_d < 0.0 || cfg.sigma < 0.0) {
        throw ArgumentError("simulation: r_n, x_d must be >= 0 and sigma >= 0");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError(fmt::format("simulation: dt must be > 0 (got {})", dt));
    if (n_steps == 0) throw ArgumentError("simulation: n_steps must be > 0");
    if (!std::isfinite(f0)) throw ArgumentError("simulation: f0 must be finite");
}

std::optional<std::string> SimulationConfig::step_warning() const {
    const double rate = std::max(alpha(cfg, 0.5), alpha(cfg, -0.5));
    if (dt * rate >= 0.1) {
        return fmt::format("dt * alpha(+-0.5) = {} >= 0.1; occupancy estimates may carry discretization bias",
                           dt * rate);
    }
    return std::nullopt;
}

OccupancyAccumulator::OccupancyAccumulator(std::uint64_t expected_samples, std::size_t max_batches) {
    if (max_batches == 0) max_batches = 1;
    n_batches_ = static_cast<std::size_t>(std::min<std::uint64_t>(max_batches, std::max<std::uint64_t>(expected_samples, 1)));
    batch_size_ = std::max<std::uint64_t>(expected_samples / n_batches_, 1);
    batches_.resize(n_batches_);
}

void OccupancyAccumulator::push(double f) {
    const auto j = static_cast<std::size_t>(interval_of(f) - 1);
    ++counts_[j];
    sum_ += f;
    // Samples beyond n_batches * batch_size count toward totals only.
    const std::uint64_t b = seen_ / batch_size_;
    if (b < n_batches_) {
        ++batches_[b].counts[j];
        batches_[b].sum += f;
    }
    ++seen_;
}

OccupancyEstimate OccupancyAccumulator::finish() const {
    if (seen_ == 0) throw DataError("occupancy: no samples after burn-in");
    OccupancyEstimate est;
    est.counts = counts_;
    est.n_samples = seen_;
    const double n = static_cast<double>(seen_);
    est.mean = sum_ / n;

    const std::uint64_t full = std::min<std::uint64_t>(seen_ / batch_size_, n_batches_);
    const double nb = static_cast<double>(full);
    const double bs = static_cast<double>(batch_size_);

    auto batch_variance = [&](auto value_of) {
        if (full < 2) return 0.0;
        double m = 0.0;
        for (std::uint64_t b = 0; b < full; ++b) m += value_of(batches_[b]);
        m /= nb;
        double v = 0.0;
        for (std::uint64_t b = 0; b < full; ++b) {
            const double d = value_of(batches_[b]) - m;
            v += d * d;
        }
        return v / (nb - 1.0);
    };

    for (std::size_t j = 0; j < 6; ++j) {
        const double frac = static_cast<double>(counts_[j]) / n;
        est.fractions[j] = frac;
        const double binom = frac * (1.0 - frac);
        if (binom == 0.0 || full < 2) {
            est.n_effective[j] = n;
            est.std_errors[j] = std::sqrt(binom / n);
            continue;
        }
        const double vb = batch_variance([&](const Batch& b) { return static_cast<double>(b.counts[j]) / bs; });
        // 2 tau_int = bs * var(batch means) / (frac (1 - frac)), floored at 1.
        const double two_tau = std::max(1.0, bs * vb / binom);
        est.n_effective[j] = n / two_tau;
        est.std_errors[j] = std::sqrt(binom / est.n_effective[j]);
    }

    if (full >= 2) {
        const double vb = batch_variance([&](const Batch& b) { return b.sum / bs; });
        est.mean_std_error = std::sqrt(vb / nb);
    }
    return est;
}

namespace {

template <class Sink>
void run_euler_maruyama(const SimulationConfig& sim, Sink&& sink) {
    sim.validate();
    Engine engine(sim.seed);
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    const double noise = sim.cfg.sigma * std::sqrt(sim.dt);
    double f = sim.f0;
    sink(0, f);
    for (std::uint64_t k = 1; k <= sim.n_steps; ++k) {
        const double z = normal(engine);
        f = f + drift(sim.cfg, f) * sim.dt + noise * z;
        sink(k, f);
    }
}

}  // namespace

std::vector<double> simulate(const SimulationConfig& sim) {
    std::vector<double> path;
    path.reserve(sim.n_steps + 1);
    run_euler_maruyama(sim, [&path](std::uint64_t, double f) { path.push_back(f); });
    return path;
}

OccupancyEstimate occupancy(std::span<const double> trajectory, std::uint64_t burn_in_steps) {
    if (trajectory.size() <= burn_in_steps + 1) {
        throw DataError(fmt::format("occupancy: burn-in of {} steps consumes the whole trajectory ({} points)",
                                    burn_in_steps, trajectory.size()));
    }
    OccupancyAccumulator acc(trajectory.size() - burn_in_steps - 1);
    for (std::size_t k = burn_in_steps + 1; k < trajectory.size(); ++k) acc.push(trajectory[k]);
    return acc.finish();
}

OccupancyEstimate simulate_occupancy(const SimulationConfig& sim) {
    sim.validate();
    if (sim.n_steps <= sim.burn_in_steps) {
        throw DataError(fmt::format("occupancy: burn-in of {} steps consumes all {} steps", sim.burn_in_steps,
                                    sim.n_steps));
    }
    OccupancyAccumulator acc(sim.n_steps - sim.burn_in_steps);
    const std::uint64_t burn = sim.burn_in_steps;
    run_euler_maruyama(sim, [&acc, burn](std::uint64_t k, double f) {
        if (k > burn) acc.push(f);
    });
    return acc.finish();
}

void write_trajectory_csv(std::ostream& os, std::span<const double> trajectory, double dt, std::uint64_t stride) {
    if (stride == 0) stride = 1;
    os << "step,time,f_hz\n";
    for (std::size_t k = 0; k < trajectory.size(); k += stride) {
        os << k << ',' << format_real(static_cast<double>(k) * dt) << ',' << format_real(trajectory[k]) << '\n';
    }
}

}  // namespace fcr
