#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "fcr/errors.hpp"
#include "fcr/simulator.hpp"
#include "fcr/stationary.hpp"

using fcr::SimulationConfig;

TEST_CASE("deterministic limit decays monotonically without crossing zero") {
    SimulationConfig sim;
    sim.cfg = {0.6, 1.45, 0.0};
    sim.f0 = 0.05;
    sim.n_steps = 5000;
    const auto path = fcr::simulate(sim);
    REQUIRE(path.size() == sim.n_steps + 1);
    for (std::size_t k = 1; k < path.size(); ++k) {
        CHECK(path[k] < path[k - 1]);
        CHECK(path[k] > 0.0);
    }
}

TEST_CASE("same seed gives bit-identical trajectories") {
    SimulationConfig sim;
    sim.cfg = {0.6, 1.45, 0.04};
    sim.n_steps = 20000;
    sim.seed = 99;
    const auto a = fcr::simulate(sim);
    const auto b = fcr::simulate(sim);
    CHECK(a == b);
    sim.seed = 100;
    CHECK(fcr::simulate(sim) != a);
}

TEST_CASE("occupancy of hand-made trajectories") {
    const std::vector<double> flat(101, 0.05);
    const auto est = fcr::occupancy(flat, 0);
    CHECK(est.fractions[3] == 1.0);
    for (int j : {0, 1, 2, 4, 5}) CHECK(est.fractions[j] == 0.0);

    std::vector<double> split(1, 0.0);
    split.insert(split.end(), 500, -0.05);
    split.insert(split.end(), 500, 0.05);
    const auto est2 = fcr::occupancy(split, 0);
    CHECK(est2.fractions[2] == doctest::Approx(0.5));
    CHECK(est2.fractions[3] == doctest::Approx(0.5));
    CHECK(est2.n_samples == 1000);

    CHECK_THROWS_AS(fcr::occupancy(flat, 100), fcr::DataError);
    CHECK_THROWS_AS(fcr::occupancy(flat, 500), fcr::DataError);
}

TEST_CASE("streaming and stored occupancy agree") {
    SimulationConfig sim;
    sim.cfg = {0.6, 1.45, 0.04};
    sim.n_steps = 200000;
    sim.burn_in_steps = 1000;
    sim.seed = 5;
    const auto path = fcr::simulate(sim);
    const auto a = fcr::occupancy(path, sim.burn_in_steps);
    const auto b = fcr::simulate_occupancy(sim);
    CHECK(a.counts == b.counts);
    CHECK(a.std_errors == b.std_errors);
    double sum = 0.0;
    for (double f : a.fractions) sum += f;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t j = 0; j < 6; ++j) {
        if (a.fractions[j] > 0.0 && a.fractions[j] < 1.0) {
            CHECK(a.std_errors[j] == doctest::Approx(std::sqrt(a.fractions[j] * (1.0 - a.fractions[j]) /
                                                               a.n_effective[j])));
            CHECK(a.n_effective[j] <= static_cast<double>(a.n_samples));
        }
    }
}

TEST_CASE("long run: symmetry, zero mean, no extreme excursions") {
    SimulationConfig sim;
    sim.cfg = {0.6, 1.45, 0.04};
    sim.n_steps = 4'000'000;
    sim.seed = 2024;
    const auto est = fcr::simulate_occupancy(sim);
    CHECK(est.fractions[0] == 0.0);
    CHECK(est.fractions[5] == 0.0);
    CHECK(std::abs(est.mean) <= 4.0 * est.mean_std_error);
    const double se = std::hypot(est.std_errors[2], est.std_errors[3]);
    CHECK(std::abs(est.fractions[2] - est.fractions[3]) <= 4.0 * se);
    const auto d = fcr::interval_probabilities(sim.cfg);
    CHECK(std::abs(est.fractions[1] + est.fractions[4] - 2.0 * d.p(2)) <=
          4.0 * std::hypot(est.std_errors[1], est.std_errors[4]));
}

TEST_CASE("halving dt moves occupancy by less than the statistical error") {
    SimulationConfig coarse;
    coarse.cfg = {0.6, 1.45, 0.04};
    coarse.n_steps = 10'000'000;
    coarse.seed = 1;
    SimulationConfig fine = coarse;
    fine.dt = 0.005;
    fine.n_steps = 20'000'000;
    fine.burn_in_steps = 200'000;
    fine.seed = 2;
    const auto a = fcr::simulate_occupancy(coarse);
    const auto b = fcr::simulate_occupancy(fine);
    for (int j = 1; j <= 4; ++j) {
        CHECK(std::abs(a.fractions[j] - b.fractions[j]) <= 3.0 * std::hypot(a.std_errors[j], b.std_errors[j]));
    }
}

TEST_CASE("configuration checks and step warning") {
    SimulationConfig sim;
    sim.cfg = {0.6, 1.45, 0.04};
    CHECK_FALSE(sim.step_warning().has_value());
    sim.dt = 0.1;
    CHECK(sim.step_warning().has_value());
    sim.dt = -1.0;
    CHECK_THROWS_AS(sim.validate(), fcr::ArgumentError);
    sim.dt = 0.01;
    sim.n_steps = 0;
    CHECK_THROWS_AS(sim.validate(), fcr::ArgumentError);
    sim.n_steps = 10;
    sim.burn_in_steps = 10;
    CHECK_THROWS_AS(fcr::simulate_occupancy(sim), fcr::DataError);
}

TEST_CASE("trajectory csv") {
    std::ostringstream os;
    const std::vector<double> path{0.0, 0.01, -0.02, 0.03};
    fcr::write_trajectory_csv(os, path, 0.01, 2);
    CHECK(os.str() == "step,time,f_hz\n0,0,0\n2,0.02,-0.02\n");
}
