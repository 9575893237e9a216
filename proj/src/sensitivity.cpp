#include "fcr/sensitivity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>
#include <string>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

#include "fcr/errors.hpp"
#include "fcr/random.hpp"
#include "fcr/report.hpp"

namespace fcr {

namespace {

std::string lower(std::string_view text) {
    std::string s;
    for (char c : text) {
        if (c != '_' && c != '-') s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return s;
}

}  // namespace

std::string_view to_string(PerturbationKind kind) noexcept {
    return kind == PerturbationKind::ThreePoint ? "threepoint" : "gaussian";
}

PerturbationKind parse_perturbation_kind(std::string_view text) {
    const auto s = lower(text);
    if (s == "threepoint" || s == "three") return PerturbationKind::ThreePoint;
    if (s == "gaussian" || s == "normal") return PerturbationKind::Gaussian;
    throw ArgumentError(fmt::format("unknown perturbation law '{}'", text));
}

std::string_view to_string(GaussianScale scale) noexcept {
    return scale == GaussianScale::StdDev ? "stddev" : "variance";
}

GaussianScale parse_gaussian_scale(std::string_view text) {
    const auto s = lower(text);
    if (s == "stddev" || s == "sd") return GaussianScale::StdDev;
    if (s == "variance" || s == "var") return GaussianScale::Variance;
    throw ArgumentError(fmt::format("unknown gaussian scale '{}'", text));
}

void PerturbationSpec::validate() const {
    if (!std::isfinite(p) || p < 0.0) throw ArgumentError(fmt::format("perturbation: p must be >= 0 (got {})", p));
    if (kind == PerturbationKind::ThreePoint && p >= 1.0) {
        throw ArgumentError(fmt::format("perturbation: three-point law needs p < 1 (got {})", p));
    }
    if (n_repetitions < 1) throw ArgumentError("perturbation: n_repetitions must be >= 1");
}

std::vector<double> sample_factors(const PerturbationSpec& spec, std::size_t H, int rep) {
    spec.validate();
    std::vector<double> psi(H, 1.0);
    if (spec.p == 0.0) return psi;

    Engine engine(derive_seed(derive_seed(spec.seed, static_cast<std::uint64_t>(spec.kind)),
                              static_cast<std::uint64_t>(rep)));
    if (spec.kind == PerturbationKind::ThreePoint) {
        boost::random::uniform_int_distribution<int> pick(0, 2);
        for (auto& v : psi) v = 1.0 + static_cast<double>(pick(engine) - 1) * spec.p;
    } else {
        const double scale = spec.gaussian_scale == GaussianScale::StdDev ? spec.p : std::sqrt(spec.p);
        boost::random::normal_distribution<double> normal(0.0, 1.0);
        for (auto& v : psi) v = std::max(1.0 + scale * normal(engine), kGaussianFactorFloor);
    }
    return psi;
}

std::vector<SweepPoint> sweep(const HourlyVolatilitySeries& series, double x_d,
                              const std::vector<DimensioningPolicy>& policies, const PerturbationSpec& spec,
                              const SweepOptions& opts) {
    spec.validate();
    if (opts.p_grid.empty()) throw ArgumentError("sweep: empty p grid");
    for (double p : opts.p_grid) {
        PerturbationSpec s = spec;
        s.p = p;
        s.validate();
    }

    const auto hours = series.valid_hours();
    const auto sigma = series.valid_sigmas();
    DimensioningPolicy static_policy;
    if (!policies.empty()) {
        static_policy = policies.front();
        static_policy.kind = PolicyKind::Static;
    }
    const PolicyEvaluation reference = evaluate_policy(static_policy, hours, sigma, sigma, series.sigma_bar, x_d,
                                                       opts.evaluation);

    std::vector<SweepPoint> out;
    out.reserve(opts.p_grid.size() * policies.size());
    std::vector<double> forecast(sigma.size());
    for (double p : opts.p_grid) {
        PerturbationSpec s = spec;
        s.p = p;
        // Factors are shared by all policies within a repetition.
        std::vector<std::vector<double>> psi;
        if (p > 0.0) {
            for (int rep = 0; rep < spec.n_repetitions; ++rep) psi.push_back(sample_factors(s, sigma.size(), rep));
        }
        for (const auto& policy : policies) {
            SweepPoint pt;
            pt.p = p;
            pt.policy = policy.kind;
            if (policy.kind == PolicyKind::Static) {
                pt.delta_p2.assign(static_cast<std::size_t>(spec.n_repetitions), 0.0);
            } else if (p == 0.0) {
                // psi == 1: every repetition is the unperturbed evaluation.
                const auto ev = evaluate_policy(policy, hours, sigma, sigma, series.sigma_bar, x_d, opts.evaluation);
                pt.delta_p2.assign(static_cast<std::size_t>(spec.n_repetitions), compare(ev, reference).overall.p2);
            } else {
                for (const auto& factors : psi) {
                    for (std::size_t i = 0; i < sigma.size(); ++i) forecast[i] = factors[i] * sigma[i];
                    const auto ev =
                        evaluate_policy(policy, hours, sigma, forecast, series.sigma_bar, x_d, opts.evaluation);
                    pt.delta_p2.push_back(compare(ev, reference).overall.p2);
                }
            }
            double sum = 0.0;
            pt.delta_p2_min = pt.delta_p2.front();
            pt.delta_p2_max = pt.delta_p2.front();
            for (double d : pt.delta_p2) {
                sum += d;
                pt.delta_p2_min = std::min(pt.delta_p2_min, d);
                pt.delta_p2_max = std::max(pt.delta_p2_max, d);
            }
            pt.delta_p2_mean = sum / static_cast<double>(pt.delta_p2.size());
            out.push_back(std::move(pt));
        }
    }
    return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points) {
    os << "p,policy,delta_p2_mean,delta_p2_min,delta_p2_max\n";
    for (const auto& pt : points) {
        os << format_real(pt.p) << ',' << to_string(pt.policy) << ',' << format_real(pt.delta_p2_mean) << ','
           << format_real(pt.delta_p2_min) << ',' << format_real(pt.delta_p2_max) << '\n';
    }
}

}  // namespace fcr
