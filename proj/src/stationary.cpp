#include "fcr/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "fcr/errors.hpp"

namespace fcr {

namespace {

constexpr int kMaxDepth = 40;
// Total panel splits per integral; an unattainable tolerance ends here as a
// QuadratureError instead of exhausting the depth on every branch.
constexpr int kMaxSplits = 20000;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Exponents below this are flushed to zero. Subnormal integrand values carry
// too few digits for a relative error test.
constexpr double kLogFloor = -700.0;

double clamped_exp(double x) { return x < kLogFloor ? 0.0 : std::exp(x); }

struct Piece {
    double value = 0.0;
    double error = 0.0;
    bool converged = true;

    Piece& operator+=(const Piece& o) {
        value += o.value;
        error += o.error;
        converged = converged && o.converged;
        return *this;
    }
};

// Adaptive bisection over the 31-point Gauss-Kronrod pair. Boost supplies the
// rule; the recursion is local because Boost's own adaptive driver compares
// an unscaled subinterval error against a scaled tolerance, which stalls on
// narrow panels. A panel is accepted when its error is below tol times its
// value or below its share of the absolute budget.
template <class F>
Piece gk_adaptive(const F& f, double a, double b, double tol, double abs_budget, int depth, int& splits) {
    using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    Piece p;
    double l1 = 0.0;
    p.value = Rule::integrate([&f, mid, half](double x) { return half * f(mid + half * x); }, -1.0, 1.0, 0, tol,
                              &p.error, &l1);
    if (abs_budget == 0.0) abs_budget = tol * l1;
    if (p.error <= tol * l1 || p.error <= abs_budget) return p;
    if (depth == 0 || splits >= kMaxSplits || !(half > 0.0) || mid == a || mid == b) {
        p.converged = false;
        return p;
    }
    ++splits;
    Piece out = gk_adaptive(f, a, mid, tol, 0.5 * abs_budget, depth - 1, splits);
    out += gk_adaptive(f, mid, b, tol, 0.5 * abs_budget, depth - 1, splits);
    return out;
}

void check_piece(const Piece& p, double a, double b, double tol, const char* what) {
    if (!p.converged || !std::isfinite(p.value) || !(p.error <= 10.0 * tol * p.value)) {
        throw QuadratureError(fmt::format("{}: quadrature did not converge on [{}, {}] (value {}, error {})",
                                          what, a, b, p.value, p.error));
    }
}

// int_0^inf f(u) du via u = t / (1 - t).
template <class F>
double integrate_half_line(const F& f, double tol, const char* what) {
    auto mapped = [&f](double t) {
        if (t >= 1.0) return 0.0;
        const double w = 1.0 / (1.0 - t);
        return f(t * w) * w * w;
    };
    int splits = 0;
    const Piece p = gk_adaptive(mapped, 0.0, 1.0, tol, 0.0, kMaxDepth, splits);
    check_piece(p, 0.0, kInf, tol, what);
    return p.value;
}

// log of int_a^b exp(drop(y)) dy, where drop = g - g(peak) for g unimodal
// with its maximum at `peak` and local fall-off length `width`. The caller
// evaluates drop without cancellation. Panels double in length away
// from the peak, so a boundary layer far thinner than b - a is still
// resolved; panels that start below exp(kLogFloor) of the peak are dropped.
// Later panels share an absolute error budget set by the peak panel.
template <class D>
double integrate_log_peaked(const D& drop, double a, double b, double peak, double width, double tol,
                            const char* what) {
    auto f = [&drop](double y) { return clamped_exp(drop(y)); };
    width = std::min(std::max(width, 1e-300), b - a);
    Piece total;
    double budget = 0.0;
    int splits = 0;
    auto side = [&](double dir, double end) {
        double near = peak;
        for (double step = width; near != end; step *= 2.0) {
            if (drop(near) < kLogFloor) break;
            double far = peak + dir * step;
            if ((dir < 0.0 && far <= end) || (dir > 0.0 && far >= end)) far = end;
            const Piece p =
                gk_adaptive(f, std::min(near, far), std::max(near, far), tol, budget, kMaxDepth, splits);
            total += p;
            if (budget == 0.0) budget = tol * p.value;
            near = far;
        }
    };
    if (peak > a) side(-1.0, a);
    if (peak < b) side(1.0, b);
    check_piece(total, a, b, tol, what);
    return std::log(total.value);
}

// Fall-off length of exp(g) at its maximum from the first three derivatives.
double peak_width(double d1, double d2, double d3) {
    const double rate = std::max({std::abs(d1), std::sqrt(std::abs(d2)), std::cbrt(std::abs(d3))});
    return rate > 0.0 ? 1.0 / rate : kInf;
}

double log_sum_exp(std::initializer_list<double> xs) {
    const double m = std::max(xs);
    if (m == -kInf) return -kInf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

void check_tol(double tol) {
    if (!(tol >= 1e-15 && tol <= 1e-3)) {
        throw ArgumentError(fmt::format("quadrature tolerance must lie in [1e-15, 1e-3] (got {})", tol));
    }
}

}  // namespace

double Normalizers::k1() const { return std::exp(log_k1); }
double Normalizers::k2() const { return std::exp(log_k2); }
double Normalizers::k3() const { return std::exp(log_k3); }

double log_component1(const ReserveConfig& cfg, double y) noexcept {
    return -y * y * (cfg.r_n + cfg.x_d) / (cfg.sigma * cfg.sigma);
}

double log_component2(const ReserveConfig& cfg, double y) noexcept {
    const double s2 = cfg.sigma * cfg.sigma;
    return -y * y * (4.0 * cfg.r_n - cfg.x_d) / (4.0 * s2) + y * y * y * 5.0 * cfg.x_d / (3.0 * s2);
}

double log_component3(const ReserveConfig& cfg, double y) noexcept {
    return 20.0 * y * y * y * cfg.r_n / (3.0 * cfg.sigma * cfg.sigma);
}

Normalizers normalizers(const ReserveConfig& cfg, double quadrature_tol) {
    cfg.validate();
    check_tol(quadrature_tol);
    const double s2 = cfg.sigma * cfg.sigma;
    Normalizers out;

    // K1: with y = -0.5 - s u the exponent becomes -a/4 - a (s u + s^2 u^2);
    // s = 1/(a + sqrt(a)) keeps the integrand's decay scale O(1) in u.
    const double a = (cfg.r_n + cfg.x_d) / s2;
    if (a == 0.0) {
        out.log_k1 = kInf;
    } else {
        const double s = 1.0 / (a + std::sqrt(a));
        const double tail = integrate_half_line(
            [a, s](double u) { return clamped_exp(-a * (s * u + s * s * u * u)); }, quadrature_tol, "K1");
        out.log_k1_rel = std::log(s) + std::log(tail);
        out.log_k1 = -0.25 * a + out.log_k1_rel;
    }

    // K2: phi(y) = -A y^2 + B y^3; an interior critical point y* = 2A/(3B)
    // exists only for A < 0 and is then a local maximum.
    {
        const double lo = -0.5;
        const double hi = -0.1;
        const double big_a = (4.0 * cfg.r_n - cfg.x_d) / (4.0 * s2);
        const double big_b = 5.0 * cfg.x_d / (3.0 * s2);
        auto phi = [&cfg](double y) { return log_component2(cfg, y); };
        double peak = phi(lo) > phi(hi) ? lo : hi;
        if (big_b > 0.0) {
            const double y_star = 2.0 * big_a / (3.0 * big_b);
            if (y_star > lo && y_star < hi && phi(y_star) > phi(peak)) peak = y_star;
        }
        // phi' = -2A y + 3B y^2, phi'' = -2A + 6B y, phi''' = 6B.
        const double width = peak_width(-2.0 * big_a * peak + 3.0 * big_b * peak * peak,
                                        -2.0 * big_a + 6.0 * big_b * peak, 6.0 * big_b);
        // phi(y) - phi(q) = (y - q) (-A (y + q) + B (y^2 + y q + q^2))
        auto diff = [big_a, big_b](double y, double q) {
            return (y - q) * (-big_a * (y + q) + big_b * (y * y + y * q + q * q));
        };
        const double log_int = integrate_log_peaked([&diff, peak](double y) { return diff(y, peak); }, lo, hi, peak,
                                                    width, quadrature_tol, "K2");
        out.log_k2_rel = diff(peak, hi) + log_int;
        out.log_k2 = phi(hi) + out.log_k2_rel;
    }

    // K3: exp(C y^3) increases on [-0.1, 0] to 1 at 0.
    {
        const double c = 20.0 * cfg.r_n / (3.0 * s2);
        out.log_k3 = integrate_log_peaked([&cfg](double y) { return log_component3(cfg, y); }, -0.1, 0.0, 0.0,
                                          peak_width(0.0, 0.0, 6.0 * c), quadrature_tol, "K3");
    }
    return out;
}

double StationaryDistribution::p(int j) const {
    if (j < 1 || j > 6) throw ArgumentError(fmt::format("interval index out of range: {}", j));
    return p_[static_cast<std::size_t>(j - 1)];
}

double StationaryDistribution::log_p(int j) const {
    if (j < 1 || j > 6) throw ArgumentError(fmt::format("interval index out of range: {}", j));
    return log_p_[static_cast<std::size_t>(j - 1)];
}

double StationaryDistribution::log_density(double f) const {
    const int j = interval_of(f);
    switch (j) {
        case 1:
        case 6:
            return log_p_[j - 1] + log_component1(cfg_, f) - norm_.log_k1;
        case 2:
            return log_p_[1] + log_component2(cfg_, f) - norm_.log_k2;
        case 5:
            return log_p_[4] + log_component2(cfg_, -f) - norm_.log_k2;
        case 3:
            return log_p_[2] + log_component3(cfg_, f) - norm_.log_k3;
        default:
            return log_p_[3] + log_component3(cfg_, -f) - norm_.log_k3;
    }
}

double StationaryDistribution::density(double f) const { return std::exp(log_density(f)); }

StationaryDistribution interval_probabilities(const ReserveConfig& cfg, double quadrature_tol) {
    cfg.validate();
    if (cfg.r_n + cfg.x_d == 0.0) {
        throw DegenerateParameterError("stationary law requires r_n + x_d > 0");
    }
    StationaryDistribution dist;
    dist.cfg_ = cfg;
    dist.tol_ = quadrature_tol;
    dist.norm_ = normalizers(cfg, quadrature_tol);

    const double s2 = cfg.sigma * cfg.sigma;
    const auto& n = dist.norm_;
    // Log weights of I1, I2, I3 relative to I3; the right half mirrors them.
    // Expanded, w2 - w3 = log K2 - log K3 - 5x/(48 s^2) + (31x + r)/(300 s^2)
    // and w1 - w3 = log K1 - log K3 + (31x + r)/(300 s^2); the endpoint
    // exponents of K1 and K2 are combined with these offsets in closed form.
    const double w1 = n.log_k1_rel - n.log_k3 - (74.0 * cfg.r_n + 44.0 * cfg.x_d) / (300.0 * s2);
    const double w2 = n.log_k2_rel - n.log_k3 - cfg.r_n / (150.0 * s2);
    const double w3 = 0.0;
    const double log_total = std::log(2.0) + log_sum_exp({w1, w2, w3});

    const std::array<double, 3> half{w1 - log_total, w2 - log_total, w3 - log_total};
    for (std::size_t j = 0; j < 3; ++j) {
        dist.log_p_[j] = half[j];
        dist.log_p_[5 - j] = half[j];
        dist.p_[j] = std::exp(half[j]);
        dist.p_[5 - j] = dist.p_[j];
    }
    return dist;
}

ExceedanceReport exceedance(const StationaryDistribution& dist) {
    ExceedanceReport rep;
    rep.p1 = dist.p(1);
    rep.p2 = dist.p(2);
    rep.p_outside_normal_band = 2.0 * rep.p2 + 2.0 * rep.p1;
    rep.minutes_per_year = rep.p_outside_normal_band * kMinutesPerYear;
    return rep;
}

ExceedanceReport exceedance(const ReserveConfig& cfg, double quadrature_tol) {
    return exceedance(interval_probabilities(cfg, quadrature_tol));
}

}  // namespace fcr
