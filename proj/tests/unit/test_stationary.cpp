#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fcr/errors.hpp"
#include "fcr/stationary.hpp"
#include "oracles.hpp"

using fcr::ReserveConfig;

namespace {

const ReserveConfig kOperatingPoint{0.6, 1.45, 0.04};

double integrate_density(const fcr::StationaryDistribution& d) {
    const auto& c = d.config();
    const double rx = c.r_n + c.x_d;
    const double tail = 0.5 + 60.0 * c.sigma * c.sigma / rx + 12.0 * c.sigma / std::sqrt(rx);
    const double cuts[] = {-tail, -0.5, -0.1, 0.0, 0.1, 0.5, tail};
    double total = 0.0;
    for (int i = 0; i < 6; ++i) {
        // Stay strictly inside each piece; the density is continuous anyway.
        const double a = cuts[i];
        const double b = cuts[i + 1];
        total += oracle::simpson([&](double f) { return d.density(f); }, a, b, 200000);
    }
    return total;
}

}  // namespace

TEST_CASE("normalizers in the flat limit") {
    const auto n = fcr::normalizers({0.0, 0.0, 1.0});
    CHECK(n.k3() == doctest::Approx(0.1).epsilon(1e-13));
    CHECK(n.k2() == doctest::Approx(0.4).epsilon(1e-13));
    CHECK(std::isinf(n.log_k1));
}

TEST_CASE("K3 against a 1e6-point Simpson sweep") {
    const double c = 20.0 * kOperatingPoint.r_n / (3.0 * kOperatingPoint.sigma * kOperatingPoint.sigma);
    const double k3 = oracle::simpson([c](double y) { return std::exp(c * y * y * y); }, -0.1, 0.0, 1'000'000);
    const auto n = fcr::normalizers(kOperatingPoint);
    CHECK(k3 == doctest::Approx(0.0647).epsilon(0.01));
    CHECK(n.k3() == doctest::Approx(k3).epsilon(1e-10));
}

TEST_CASE("K2 against a Simpson sweep with the peak factored out") {
    const double s2 = kOperatingPoint.sigma * kOperatingPoint.sigma;
    const double a = (4.0 * kOperatingPoint.r_n - kOperatingPoint.x_d) / (4.0 * s2);
    const double b = 5.0 * kOperatingPoint.x_d / (3.0 * s2);
    auto phi = [&](double y) { return -a * y * y + b * y * y * y; };
    double peak = -1e300;
    for (int i = 0; i <= 4000; ++i) peak = std::max(peak, phi(-0.5 + 0.4 * i / 4000.0));
    const double scaled = oracle::simpson([&](double y) { return std::exp(phi(y) - peak); }, -0.5, -0.1, 1'000'000);
    const auto n = fcr::normalizers(kOperatingPoint);
    CHECK(n.log_k2 == doctest::Approx(peak + std::log(scaled)).epsilon(1e-11));
}

TEST_CASE("K1 against the complementary error function") {
    for (const ReserveConfig cfg : {kOperatingPoint, ReserveConfig{0.1, 0.2, 0.5}, ReserveConfig{3.0, 1.45, 0.09},
                                    ReserveConfig{0.0, 0.01, 1.0}}) {
        const double a = (cfg.r_n + cfg.x_d) / (cfg.sigma * cfg.sigma);
        const double log_k1 = std::log(0.5 * std::sqrt(std::numbers::pi / a) * std::erfc(0.5 * std::sqrt(a)));
        CHECK(fcr::normalizers(cfg).log_k1 == doctest::Approx(log_k1).epsilon(1e-11));
    }
}

TEST_CASE("operating point") {
    const auto d = fcr::interval_probabilities(kOperatingPoint);
    CHECK(d.p(2) == doctest::Approx(0.0070878367).epsilon(1e-8));
    CHECK(2.0 * d.p(2) >= 0.012);
    CHECK(2.0 * d.p(2) <= 0.024);
    CHECK(d.p(1) < 1e-50);
    CHECK(d.log_p(1) == doctest::Approx(-230.546175).epsilon(1e-8));
    const auto ex = fcr::exceedance(d);
    CHECK(ex.minutes_per_year == doctest::Approx(ex.p_outside_normal_band * 525600.0).epsilon(1e-15));
    CHECK(ex.minutes_per_year < 10000.0);
    CHECK(ex.p_outside_normal_band == doctest::Approx(2.0 * d.p(2) + 2.0 * d.p(1)).epsilon(1e-15));
}

TEST_CASE("closed form agrees with the potential-route oracle") {
    for (const ReserveConfig cfg : {kOperatingPoint, ReserveConfig{1.2, 1.45, 0.06}, ReserveConfig{0.3, 1.45, 0.03},
                                    ReserveConfig{0.05, 0.1, 0.2}, ReserveConfig{0.0, 1.45, 0.04},
                                    ReserveConfig{2.0, 0.0, 0.1}, ReserveConfig{0.0, 50.0, 0.01}}) {
        CAPTURE(cfg.r_n);
        CAPTURE(cfg.sigma);
        const auto ref = oracle::potential_probabilities(cfg);
        const auto d = fcr::interval_probabilities(cfg);
        for (int j = 1; j <= 6; ++j) {
            if (ref[j - 1] < 1e-250) {
                CHECK(d.p(j) < 1e-200);
            } else {
                CHECK(d.p(j) == doctest::Approx(ref[j - 1]).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("structure: normalization, symmetry, continuity, total mass") {
    for (const ReserveConfig cfg : {kOperatingPoint, ReserveConfig{1.2, 1.45, 0.06}, ReserveConfig{0.05, 0.1, 0.2},
                                    ReserveConfig{0.3, 1.45, 0.03}}) {
        const auto d = fcr::interval_probabilities(cfg);
        double sum = 0.0;
        for (int j = 1; j <= 6; ++j) {
            CHECK(d.p(j) >= 0.0);
            sum += d.p(j);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-10);
        CHECK(d.p(1) == doctest::Approx(d.p(6)).epsilon(1e-12));
        CHECK(d.p(2) == doctest::Approx(d.p(5)).epsilon(1e-12));
        CHECK(d.p(3) == doctest::Approx(d.p(4)).epsilon(1e-12));
        for (double b : {-0.5, -0.1, 0.1, 0.5}) {
            const double left = d.log_density(std::nextafter(b, -1.0));
            const double right = d.log_density(std::nextafter(b, 1.0));
            CHECK(std::abs(std::expm1(left - right)) <= 1e-8);
        }
        CHECK(d.density(0.03) == d.density(-0.03));
        CHECK(d.density(0.3) == doctest::Approx(d.density(-0.3)).epsilon(1e-13));
        CHECK(integrate_density(d) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("homogeneity of the p vector") {
    const auto base = fcr::interval_probabilities(kOperatingPoint).probabilities();
    for (double k : {0.25, 1.0, 4.0, 16.0}) {
        const auto p = fcr::interval_probabilities({k * kOperatingPoint.r_n, k * kOperatingPoint.x_d, std::sqrt(k) * kOperatingPoint.sigma})
                           .probabilities();
        for (int j = 2; j <= 5; ++j) CHECK(p[j - 1] == doctest::Approx(base[j - 1]).epsilon(1e-10));
    }
}

TEST_CASE("p2 decreases in r_n") {
    double prev = 1.0;
    for (int i = 1; i <= 15; ++i) {
        const double p2 = fcr::interval_probabilities({0.2 * i, 1.45, 0.04}).p(2);
        CHECK(p2 < prev);
        prev = p2;
    }
    CHECK(fcr::exceedance(ReserveConfig{100.0, 1.45, 0.04}).p_outside_normal_band < 1e-3);
}

TEST_CASE("stationary errors") {
    CHECK_THROWS_AS(fcr::interval_probabilities({0.6, 1.45, 0.0}), fcr::DegenerateParameterError);
    CHECK_THROWS_AS(fcr::interval_probabilities({0.0, 0.0, 0.04}), fcr::DegenerateParameterError);
    CHECK_THROWS_AS(fcr::interval_probabilities(kOperatingPoint, 1e-20), fcr::ArgumentError);
    CHECK_THROWS_AS(fcr::interval_probabilities(kOperatingPoint).p(7), fcr::ArgumentError);
}

TEST_CASE("extreme but valid parameters stay finite") {
    for (const ReserveConfig cfg : {ReserveConfig{50.0, 1.45, 0.01}, ReserveConfig{0.0, 1.45, 0.005},
                                    ReserveConfig{0.001, 0.001, 3.0}, ReserveConfig{0.0, 50.0, 0.01},
                                    ReserveConfig{0.01, 400.0, 0.002}}) {
        CAPTURE(cfg.r_n);
        CAPTURE(cfg.x_d);
        CAPTURE(cfg.sigma);
        const auto d = fcr::interval_probabilities(cfg);
        double sum = 0.0;
        for (int j = 1; j <= 6; ++j) {
            CHECK(std::isfinite(d.p(j)));
            sum += d.p(j);
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}
