#pragma once

// Reference computations used by the tests. None of these call into the
// stationary solver; they only share the model definition (alpha).

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fcr/drift_model.hpp"

namespace oracle {

/// Composite Simpson with n (even) panels.
inline double simpson(const std::function<double(double)>& g, double a, double b, long n) {
    if (n % 2) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double s = g(a) + g(b);
    for (long i = 1; i < n; ++i) s += g(a + static_cast<double>(i) * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Interval probabilities from the scalar potential of the diffusion:
/// density proportional to exp(-2 U(f) / sigma^2), U(f) = int_0^f alpha(u) u du.
/// U is accumulated panel by panel with Simpson's rule, which is exact because
/// alpha(u) u is a cubic on each panel when panels align with the breakpoints.
/// Only f >= 0 is integrated; the left half follows from alpha(-f) = alpha(f).
inline std::array<double, 6> potential_probabilities(const fcr::ReserveConfig& cfg, double h = 1e-5) {
    const double s2 = cfg.sigma * cfg.sigma;
    const double rx = cfg.r_n + cfg.x_d;
    const double tail = 0.5 + 60.0 * s2 / rx + 12.0 * cfg.sigma / std::sqrt(rx);
    const auto n_of = [h](double len) { return static_cast<long>(std::llround(len / h)); };
    const long n1 = n_of(0.1);
    const long n2 = n_of(0.4);
    long n3 = n_of(tail - 0.5);
    if (n3 % 2) ++n3;
    const long total = n1 + n2 + n3;

    auto integrand = [&](double u) { return fcr::alpha(cfg, u) * u; };
    std::vector<double> logd(static_cast<std::size_t>(total) + 1);
    double u_acc = 0.0;
    logd[0] = 0.0;
    for (long k = 0; k < total; ++k) {
        const double a = static_cast<double>(k) * h;
        const double b = static_cast<double>(k + 1) * h;
        u_acc += h / 6.0 * (integrand(a) + 4.0 * integrand(0.5 * (a + b)) + integrand(b));
        logd[static_cast<std::size_t>(k + 1)] = -2.0 * u_acc / s2;
    }
    auto piece = [&](long from, long n) {
        double s = 0.0;
        for (long i = 0; i <= n; ++i) {
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            s += w * std::exp(logd[static_cast<std::size_t>(from + i)]);
        }
        return s * h / 3.0;
    };
    const double q4 = piece(0, n1);
    const double q5 = piece(n1, n2);
    const double q6 = piece(n1 + n2, n3);
    const double z = 2.0 * (q4 + q5 + q6);
    return {q6 / z, q5 / z, q4 / z, q4 / z, q5 / z, q6 / z};
}

/// Required r_N for a target exceedance 2 p2 + 2 p1 using the potential route
/// and plain bisection on [0, hi].
inline double potential_required_rn(double sigma, double x_d, double target, double hi = 20.0,
                                    double tol = 1e-5, double h = 2e-5) {
    auto exceed = [&](double r) {
        const auto p = potential_probabilities({r, x_d, sigma}, h);
        return 2.0 * (p[0] + p[1]);
    };
    double lo = 0.0;
    if (exceed(lo) <= target) return 0.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (exceed(mid) <= target ? hi : lo) = mid;
    }
    return hi;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    static int counter = 0;
    auto p = std::filesystem::temp_directory_path() /
             ("fcr_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace oracle
