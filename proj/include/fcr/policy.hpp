#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fcr/calibration.hpp"
#include "fcr/stationary.hpp"

namespace fcr {

enum class PolicyKind { Static, Linear, Step, ScaleLinear, StepFloor };

std::string_view to_string(PolicyKind kind) noexcept;
/// Accepts static, linear, step, scalelinear/scalelin, stepfloor (case-insensitive).
PolicyKind parse_policy_kind(std::string_view text);

/// Hourly allocation rule r_i = r_bar * g(sigma_i; sigma_bar) * eta.
struct DimensioningPolicy {
    PolicyKind kind = PolicyKind::Static;
    double r_bar = 0.6;                 // GW
    std::optional<double> sigma_bar;    // overrides the series' reference sigma
    double xi_l = 0.75;
    double xi_u = 1.25;
    double gamma = 1.0;                 // ScaleLinear only
    double m = 2.0;                     // StepFloor multiple
    double zeta = 1.35;                 // StepFloor threshold

    void validate() const;
};

/// JSON with optional fields kind, r_bar, sigma_bar, xi_l, xi_u, gamma, m, zeta.
DimensioningPolicy policy_from_json(const nlohmann::json& j);
nlohmann::json policy_to_json(const DimensioningPolicy& p);

/// Scaling function g.
///   Static 1; Linear s/sb; Step 0.5 / 1 / 1.5 split at xi_l*sb (strict <) and
///   xi_u*sb (strict >); ScaleLinear gamma*s/sb; StepFloor 1 or m split at zeta*sb.
double g_value(const DimensioningPolicy& policy, double sigma_i, double sigma_bar);

/// Budget normalizer eta = H / sum_i g(sigma_i) so the dynamic policy spends
/// exactly H * r_bar. ScaleLinear normalizes its Linear part (gamma is applied
/// on top); StepFloor and Static use eta = 1. Throws NumericalError if all g
/// vanish.
double normalize_eta(const DimensioningPolicy& policy, std::span<const double> sigmas, double sigma_bar);

enum class Segment { High = 0, MediumHigh = 1, MediumLow = 2, Low = 3 };
inline constexpr std::array<Segment, 4> kSegments{Segment::High, Segment::MediumHigh, Segment::MediumLow,
                                                  Segment::Low};
std::string_view to_string(Segment s) noexcept;

/// High: s > xi_u sb; MediumHigh: sb < s <= xi_u sb; MediumLow: xi_l sb < s <= sb; Low: s <= xi_l sb.
Segment classify(double sigma_i, double sigma_bar, double xi_l, double xi_u) noexcept;

struct HourResult {
    int hour = 0;
    double sigma = 0.0;           // realized, used for p2
    double sigma_forecast = 0.0;  // used for the allocation
    double g = 0.0;
    double r_n = 0.0;
    double p2 = 0.0;
    bool ok = true;  // false when the stationary solve failed for this hour
    std::string error;
};

struct SegmentAggregate {
    std::size_t hours = 0;
    double sum_p2 = 0.0;
    double sum_rn = 0.0;
};

struct PolicyEvaluation {
    DimensioningPolicy policy;
    double sigma_bar = 0.0;
    double x_d = 0.0;
    double eta = 1.0;
    std::vector<HourResult> per_hour;
    double total_budget_gwh = 0.0;  // sum of r_i over 1-hour slots
    double total_p2 = 0.0;          // over hours with ok == true
    std::size_t flagged_hours = 0;
    std::array<SegmentAggregate, 4> segments{};  // indexed by Segment
};

struct EvaluationOptions {
    double quadrature_tol = kDefaultQuadratureTol;
};

/// Allocates on `forecast`, evaluates p2 on `realized`; hours and both sigma
/// vectors align index by index.
PolicyEvaluation evaluate_policy(const DimensioningPolicy& policy, std::span<const int> hours,
                                 std::span<const double> realized, std::span<const double> forecast,
                                 double sigma_bar, double x_d, const EvaluationOptions& opts = {});

/// Valid hours of a calibrated series, forecast = realized.
PolicyEvaluation evaluate_policy(const DimensioningPolicy& policy, const HourlyVolatilitySeries& series, double x_d,
                                 const EvaluationOptions& opts = {});

struct Delta {
    double p2 = 0.0;  // (sum p2 - sum p2_ref) / sum p2_ref; NaN if the reference sum is 0
    double rn = 0.0;
};

struct DeltaTable {
    Delta overall;
    std::array<Delta, 4> by_segment{};  // indexed by Segment
    std::array<SegmentAggregate, 4> evaluation_segments{};
    std::array<SegmentAggregate, 4> reference_segments{};
};

/// Relative changes versus a reference, with segments taken from the
/// reference's realized sigma and thresholds. Hours are matched by index, so
/// row order does not matter. Throws DataError if the hour sets differ.
DeltaTable compare(const PolicyEvaluation& evaluation, const PolicyEvaluation& reference);

struct GammaSolution {
    double gamma = 1.0;
    double total_p2 = 0.0;
    double target_total_p2 = 0.0;
    int evaluations = 0;
};

/// gamma for ScaleLinear (built from `base`'s r_bar/sigma_bar) such that the
/// summed p2 equals target within 0.5% relative; bisection in log gamma.
/// Throws BracketError with the achievable range if gamma in [1e-3, 1e3]
/// cannot reach the target.
GammaSolution solve_gamma(const HourlyVolatilitySeries& series, double x_d, double target_total_p2,
                          const DimensioningPolicy& base = {}, const EvaluationOptions& opts = {});

/// `hour,sigma,g,r_n_gw,p2`; flagged hours leave p2 empty.
void write_per_hour_csv(std::ostream& os, const PolicyEvaluation& eval);
/// `policy,segment,sum_p2,p2_share` rows for a pie chart of sum p2 by segment.
void write_segment_share_csv(std::ostream& os, std::span<const PolicyEvaluation* const> evals);

nlohmann::json evaluation_summary_json(const PolicyEvaluation& eval);
nlohmann::json delta_table_json(const DeltaTable& table, const PolicyEvaluation& evaluation,
                                const PolicyEvaluation& reference);

}  // namespace fcr
