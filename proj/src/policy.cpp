#include "fcr/policy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>

#include "fcr/errors.hpp"
#include "fcr/report.hpp"

namespace fcr {

std::string_view to_string(PolicyKind kind) noexcept {
    switch (kind) {
        case PolicyKind::Static:
            return "static";
        case PolicyKind::Linear:
            return "linear";
        case PolicyKind::Step:
            return "step";
        case PolicyKind::ScaleLinear:
            return "scalelinear";
        case PolicyKind::StepFloor:
            return "stepfloor";
    }
    return "unknown";
}

PolicyKind parse_policy_kind(std::string_view text) {
    std::string s;
    for (char c : text) {
        if (c != '_' && c != '-') s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (s == "static") return PolicyKind::Static;
    if (s == "linear" || s == "lin") return PolicyKind::Linear;
    if (s == "step") return PolicyKind::Step;
    if (s == "scalelinear" || s == "scalelin") return PolicyKind::ScaleLinear;
    if (s == "stepfloor") return PolicyKind::StepFloor;
    throw ArgumentError(fmt::format("unknown policy kind '{}'", text));
}

std::string_view to_string(Segment s) noexcept {
    switch (s) {
        case Segment::High:
            return "High";
        case Segment::MediumHigh:
            return "MediumHigh";
        case Segment::MediumLow:
            return "MediumLow";
        case Segment::Low:
            return "Low";
    }
    return "unknown";
}

void DimensioningPolicy::validate() const {
    if (!(r_bar > 0.0)) throw ArgumentError(fmt::format("policy: r_bar must be > 0 (got {})", r_bar));
    if (!(xi_l > 0.0 && xi_l <= 1.0 && xi_u >= 1.0)) {
        throw ArgumentError(fmt::format("policy: need 0 < xi_l <= 1 <= xi_u (got {}, {})", xi_l, xi_u));
    }
    if (!(gamma > 0.0)) throw ArgumentError(fmt::format("policy: gamma must be > 0 (got {})", gamma));
    if (!(m >= 1.0)) throw ArgumentError(fmt::format("policy: m must be >= 1 (got {})", m));
    if (!(zeta > 0.0)) throw ArgumentError(fmt::format("policy: zeta must be > 0 (got {})", zeta));
    if (sigma_bar && !(*sigma_bar > 0.0)) throw ArgumentError("policy: sigma_bar must be > 0");
}

DimensioningPolicy policy_from_json(const nlohmann::json& j) {
    DimensioningPolicy p;
    try {
        if (j.contains("kind")) p.kind = parse_policy_kind(j["kind"].get<std::string>());
        p.r_bar = j.value("r_bar", p.r_bar);
        p.xi_l = j.value("xi_l", p.xi_l);
        p.xi_u = j.value("xi_u", p.xi_u);
        p.gamma = j.value("gamma", p.gamma);
        p.m = j.value("m", p.m);
        p.zeta = j.value("zeta", p.zeta);
        if (j.contains("sigma_bar") && !j["sigma_bar"].is_null()) p.sigma_bar = j["sigma_bar"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(fmt::format("policy config: {}", e.what()));
    }
    p.validate();
    return p;
}

nlohmann::json policy_to_json(const DimensioningPolicy& p) {
    return {{"kind", to_string(p.kind)},
            {"r_bar", json_real(p.r_bar)},
            {"sigma_bar", p.sigma_bar ? json_real(*p.sigma_bar) : nlohmann::json(nullptr)},
            {"xi_l", json_real(p.xi_l)},
            {"xi_u", json_real(p.xi_u)},
            {"gamma", json_real(p.gamma)},
            {"m", json_real(p.m)},
            {"zeta", json_real(p.zeta)}};
}

double g_value(const DimensioningPolicy& policy, double sigma_i, double sigma_bar) {
    switch (policy.kind) {
        case PolicyKind::Static:
            return 1.0;
        case PolicyKind::Linear:
            return sigma_i / sigma_bar;
        case PolicyKind::Step:
            if (sigma_i < sigma_bar * policy.xi_l) return 0.5;
            if (sigma_i > sigma_bar * policy.xi_u) return 1.5;
            return 1.0;
        case PolicyKind::ScaleLinear:
            return sigma_i / sigma_bar * policy.gamma;
        case PolicyKind::StepFloor:
            return sigma_i > sigma_bar * policy.zeta ? policy.m : 1.0;
    }
    return 1.0;
}

double normalize_eta(const DimensioningPolicy& policy, std::span<const double> sigmas, double sigma_bar) {
    if (sigmas.empty()) throw DataError("normalize_eta: no valid hours");
    if (!(sigma_bar > 0.0)) throw ArgumentError("normalize_eta: sigma_bar must be > 0");
    if (policy.kind == PolicyKind::StepFloor || policy.kind == PolicyKind::Static) return 1.0;

    DimensioningPolicy shape = policy;
    if (shape.kind == PolicyKind::ScaleLinear) shape.kind = PolicyKind::Linear;
    double sum = 0.0;
    for (double s : sigmas) sum += g_value(shape, s, sigma_bar);
    if (!(sum > 0.0)) throw DegenerateParameterError("normalize_eta: all g values are zero");
    return static_cast<double>(sigmas.size()) / sum;
}

Segment classify(double sigma_i, double sigma_bar, double xi_l, double xi_u) noexcept {
    if (sigma_i > xi_u * sigma_bar) return Segment::High;
    if (sigma_i > sigma_bar) return Segment::MediumHigh;
    if (sigma_i > xi_l * sigma_bar) return Segment::MediumLow;
    return Segment::Low;
}

PolicyEvaluation evaluate_policy(const DimensioningPolicy& policy, std::span<const int> hours,
                                 std::span<const double> realized, std::span<const double> forecast,
                                 double sigma_bar, double x_d, const EvaluationOptions& opts) {
    policy.validate();
    if (hours.size() != realized.size() || hours.size() != forecast.size()) {
        throw ArgumentError("evaluate_policy: hours and sigma series differ in length");
    }
    if (!(x_d >= 0.0)) throw ArgumentError("evaluate_policy: x_d must be >= 0");

    PolicyEvaluation ev;
    ev.policy = policy;
    ev.sigma_bar = policy.sigma_bar.value_or(sigma_bar);
    ev.x_d = x_d;
    ev.eta = normalize_eta(policy, forecast, ev.sigma_bar);
    ev.per_hour.reserve(hours.size());

    for (std::size_t i = 0; i < hours.size(); ++i) {
        HourResult h;
        h.hour = hours[i];
        h.sigma = realized[i];
        h.sigma_forecast = forecast[i];
        h.g = g_value(policy, forecast[i], ev.sigma_bar);
        h.r_n = policy.r_bar * h.g * ev.eta;
        try {
            h.p2 = interval_probabilities(ReserveConfig{h.r_n, x_d, h.sigma}, opts.quadrature_tol).p(2);
        } catch (const NumericalError& e) {
            h.ok = false;
            h.p2 = std::numeric_limits<double>::quiet_NaN();
            h.error = e.what();
        } catch (const ArgumentError& e) {
            h.ok = false;
            h.p2 = std::numeric_limits<double>::quiet_NaN();
            h.error = e.what();
        }
        ev.total_budget_gwh += h.r_n;
        auto& seg = ev.segments[static_cast<std::size_t>(classify(h.sigma, ev.sigma_bar, policy.xi_l, policy.xi_u))];
        ++seg.hours;
        seg.sum_rn += h.r_n;
        if (h.ok) {
            ev.total_p2 += h.p2;
            seg.sum_p2 += h.p2;
        } else {
            ++ev.flagged_hours;
        }
        ev.per_hour.push_back(std::move(h));
    }
    return ev;
}

PolicyEvaluation evaluate_policy(const DimensioningPolicy& policy, const HourlyVolatilitySeries& series, double x_d,
                                 const EvaluationOptions& opts) {
    const auto hours = series.valid_hours();
    const auto sigmas = series.valid_sigmas();
    return evaluate_policy(policy, hours, sigmas, sigmas, series.sigma_bar, x_d, opts);
}

namespace {

double relative_change(double value, double reference) {
    if (reference == 0.0) return value == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    return (value - reference) / reference;
}

}  // namespace

DeltaTable compare(const PolicyEvaluation& evaluation, const PolicyEvaluation& reference) {
    if (evaluation.per_hour.size() != reference.per_hour.size()) {
        throw DataError(fmt::format("compare: hour counts differ ({} vs {})", evaluation.per_hour.size(),
                                    reference.per_hour.size()));
    }
    std::unordered_map<int, const HourResult*> by_hour;
    by_hour.reserve(evaluation.per_hour.size());
    for (const auto& h : evaluation.per_hour) by_hour.emplace(h.hour, &h);

    DeltaTable t;
    SegmentAggregate eval_total;
    SegmentAggregate ref_total;
    for (const auto& ref : reference.per_hour) {
        const auto it = by_hour.find(ref.hour);
        if (it == by_hour.end()) throw DataError(fmt::format("compare: hour {} missing from evaluation", ref.hour));
        const HourResult& ev = *it->second;
        const auto seg = static_cast<std::size_t>(
            classify(ref.sigma, reference.sigma_bar, reference.policy.xi_l, reference.policy.xi_u));
        auto& es = t.evaluation_segments[seg];
        auto& rs = t.reference_segments[seg];
        ++es.hours;
        ++rs.hours;
        es.sum_rn += ev.r_n;
        rs.sum_rn += ref.r_n;
        eval_total.sum_rn += ev.r_n;
        ref_total.sum_rn += ref.r_n;
        if (ev.ok && ref.ok) {
            es.sum_p2 += ev.p2;
            rs.sum_p2 += ref.p2;
            eval_total.sum_p2 += ev.p2;
            ref_total.sum_p2 += ref.p2;
        }
    }
    t.overall = {relative_change(eval_total.sum_p2, ref_total.sum_p2),
                 relative_change(eval_total.sum_rn, ref_total.sum_rn)};
    for (std::size_t s = 0; s < 4; ++s) {
        t.by_segment[s] = {relative_change(t.evaluation_segments[s].sum_p2, t.reference_segments[s].sum_p2),
                           relative_change(t.evaluation_segments[s].sum_rn, t.reference_segments[s].sum_rn)};
    }
    return t;
}

GammaSolution solve_gamma(const HourlyVolatilitySeries& series, double x_d, double target_total_p2,
                          const DimensioningPolicy& base, const EvaluationOptions& opts) {
    if (!(target_total_p2 > 0.0)) throw ArgumentError("solve_gamma: target total p2 must be > 0");
    DimensioningPolicy policy = base;
    policy.kind = PolicyKind::ScaleLinear;

    GammaSolution sol;
    sol.target_total_p2 = target_total_p2;
    auto total = [&](double gamma) {
        policy.gamma = gamma;
        ++sol.evaluations;
        return evaluate_policy(policy, series, x_d, opts).total_p2;
    };

    constexpr double kGammaMin = 1e-3;
    constexpr double kGammaMax = 1e3;
    constexpr double kAcceptRel = 5e-3;
    constexpr double kStopRel = 1e-5;

    // total(gamma) decreases in gamma; find lo with total >= target, hi with total <= target.
    double lo = 1.0;
    double hi = 1.0;
    double f_lo = total(1.0);
    double f_hi = f_lo;
    while (f_lo < target_total_p2 && lo > kGammaMin) {
        hi = lo;
        f_hi = f_lo;
        lo = std::max(lo * 0.5, kGammaMin);
        f_lo = total(lo);
    }
    while (f_hi > target_total_p2 && hi < kGammaMax) {
        lo = hi;
        f_lo = f_hi;
        hi = std::min(hi * 2.0, kGammaMax);
        f_hi = total(hi);
    }
    if (f_lo < target_total_p2 || f_hi > target_total_p2) {
        throw BracketError(fmt::format("solve_gamma: target sum p2 {} outside achievable range [{}, {}] for gamma in "
                                       "[{}, {}]",
                                       target_total_p2, std::min(f_lo, f_hi), std::max(f_lo, f_hi), kGammaMin,
                                       kGammaMax),
                           std::min(f_lo, f_hi), std::max(f_lo, f_hi));
    }

    double best = std::abs(f_lo - target_total_p2) < std::abs(f_hi - target_total_p2) ? lo : hi;
    double best_f = best == lo ? f_lo : f_hi;
    for (int it = 0; it < 100 && std::abs(best_f - target_total_p2) > kStopRel * target_total_p2; ++it) {
        const double mid = std::sqrt(lo * hi);
        const double f_mid = total(mid);
        if (f_mid >= target_total_p2) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (std::abs(f_mid - target_total_p2) < std::abs(best_f - target_total_p2)) {
            best = mid;
            best_f = f_mid;
        }
        if (hi / lo - 1.0 < 1e-14) break;
    }
    if (std::abs(best_f - target_total_p2) > kAcceptRel * target_total_p2) {
        throw NumericalError(fmt::format("solve_gamma: best gamma {} gives sum p2 {} (target {})", best, best_f,
                                         target_total_p2));
    }
    sol.gamma = best;
    sol.total_p2 = best_f;
    return sol;
}

void write_per_hour_csv(std::ostream& os, const PolicyEvaluation& eval) {
    os << "hour,sigma,g,r_n_gw,p2\n";
    for (const auto& h : eval.per_hour) {
        os << h.hour << ',' << format_real(h.sigma) << ',' << format_real(h.g) << ',' << format_real(h.r_n) << ','
           << (h.ok ? format_real(h.p2) : std::string{}) << '\n';
    }
}

void write_segment_share_csv(std::ostream& os, std::span<const PolicyEvaluation* const> evals) {
    os << "policy,segment,sum_p2,p2_share\n";
    for (const PolicyEvaluation* ev : evals) {
        for (Segment s : kSegments) {
            const auto& agg = ev->segments[static_cast<std::size_t>(s)];
            const double share = ev->total_p2 > 0.0 ? agg.sum_p2 / ev->total_p2 : 0.0;
            os << to_string(ev->policy.kind) << ',' << to_string(s) << ',' << format_real(agg.sum_p2) << ','
               << format_real(share) << '\n';
        }
    }
}

nlohmann::json evaluation_summary_json(const PolicyEvaluation& eval) {
    nlohmann::json segs = nlohmann::json::object();
    for (Segment s : kSegments) {
        const auto& a = eval.segments[static_cast<std::size_t>(s)];
        segs[std::string(to_string(s))] = {
            {"hours", a.hours}, {"sum_p2", json_real(a.sum_p2)}, {"sum_r_n_gwh", json_real(a.sum_rn)}};
    }
    return {{"policy", policy_to_json(eval.policy)},
            {"sigma_bar", json_real(eval.sigma_bar)},
            {"x_d", json_real(eval.x_d)},
            {"eta", json_real(eval.eta)},
            {"hours", eval.per_hour.size()},
            {"flagged_hours", eval.flagged_hours},
            {"total_budget_gwh", json_real(eval.total_budget_gwh)},
            {"total_p2", json_real(eval.total_p2)},
            {"segments", std::move(segs)}};
}

nlohmann::json delta_table_json(const DeltaTable& table, const PolicyEvaluation& evaluation,
                                const PolicyEvaluation& reference) {
    nlohmann::json rows = nlohmann::json::array();
    for (Segment s : kSegments) {
        const auto i = static_cast<std::size_t>(s);
        rows.push_back({{"segment", to_string(s)},
                        {"hours", table.reference_segments[i].hours},
                        {"delta_p2", json_real(table.by_segment[i].p2)},
                        {"delta_r_n", json_real(table.by_segment[i].rn)},
                        {"sum_p2", json_real(table.evaluation_segments[i].sum_p2)},
                        {"sum_p2_reference", json_real(table.reference_segments[i].sum_p2)},
                        {"sum_r_n_gwh", json_real(table.evaluation_segments[i].sum_rn)},
                        {"sum_r_n_gwh_reference", json_real(table.reference_segments[i].sum_rn)}});
    }
    return {{"policy", to_string(evaluation.policy.kind)},
            {"reference", to_string(reference.policy.kind)},
            {"gamma", json_real(evaluation.policy.gamma)},
            {"segments", std::move(rows)},
            {"overall", {{"delta_p2", json_real(table.overall.p2)}, {"delta_r_n", json_real(table.overall.rn)}}},
            {"total_budget_gwh", json_real(evaluation.total_budget_gwh)},
            {"total_budget_gwh_reference", json_real(reference.total_budget_gwh)},
            {"total_p2", json_real(evaluation.total_p2)},
            {"total_p2_reference", json_real(reference.total_p2)}};
}

}  // namespace fcr
