#include "fcr/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <utility>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "fcr/calibration.hpp"
#include "fcr/dimensioning.hpp"
#include "fcr/errors.hpp"
#include "fcr/policy.hpp"
#include "fcr/report.hpp"
#include "fcr/sensitivity.hpp"
#include "fcr/simulator.hpp"
#include "fcr/stationary.hpp"

namespace fcr::cli {

namespace {

constexpr double kDefaultXd = 1.45;
constexpr double kDefaultRbar = 0.6;

struct Artifact {
    std::string name;
    std::string content;
};

struct Outcome {
    std::vector<Artifact> files;
    std::string summary;
};

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

template <class Fn>
std::string render(Fn&& fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
}

std::vector<double> linear_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) throw ArgumentError("grid: need step > 0 and max >= min");
    std::vector<double> g;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) {
        // Round to 12 digits so that 0.02 + 3 * 0.005 prints as 0.035.
        g.push_back(std::stod(format_real(lo + static_cast<double>(i) * step)));
    }
    return g;
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open {}", path));
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("{}: {}", path, e.what()));
    }
}

// Shared flags of the policy subcommands.
struct PolicyArgs {
    std::string series_path;
    double x_d = kDefaultXd;
    double r_bar = kDefaultRbar;
    std::string kind = "static";
    std::string config_path;

    void attach(CLI::App* sub, bool with_kind) {
        sub->add_option("--sigma-series", series_path, "Hourly sigma series (CSV or .json)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--xd", x_d, "FCR-D volume x_D in GW")->capture_default_str();
        sub->add_option("--rbar", r_bar, "Static reference volume in GW")->capture_default_str();
        if (with_kind) sub->add_option("--policy", kind, "static|linear|step|scalelinear|stepfloor")->capture_default_str();
        sub->add_option("--policy-config", config_path, "Policy JSON; fields override --policy/--rbar")
            ->check(CLI::ExistingFile);
    }

    DimensioningPolicy policy() const {
        nlohmann::json j = config_path.empty() ? nlohmann::json::object() : read_json_file(config_path);
        if (!j.is_object()) throw ArgumentError("policy config must be a JSON object");
        if (!j.contains("kind")) j["kind"] = kind;
        if (!j.contains("r_bar")) j["r_bar"] = r_bar;
        return policy_from_json(j);
    }
};

std::string file_tag(PolicyKind k) { return std::string(to_string(k)); }

nlohmann::json stationary_json(const StationaryDistribution& d) {
    const auto ex = exceedance(d);
    nlohmann::json p = nlohmann::json::array();
    nlohmann::json lp = nlohmann::json::array();
    for (int j = 1; j <= 6; ++j) {
        p.push_back(json_real(d.p(j)));
        lp.push_back(json_real(d.log_p(j)));
    }
    const auto& n = d.normalizers();
    return {{"config",
             {{"r_n_gw", json_real(d.config().r_n)},
              {"x_d_gw", json_real(d.config().x_d)},
              {"sigma", json_real(d.config().sigma)}}},
            {"p", std::move(p)},
            {"log_p", std::move(lp)},
            {"two_p2", json_real(2.0 * d.p(2))},
            {"p_outside_normal_band", json_real(ex.p_outside_normal_band)},
            {"minutes_per_year_outside", json_real(ex.minutes_per_year)},
            {"log_normalizers", {{"k1", json_real(n.log_k1)}, {"k2", json_real(n.log_k2)}, {"k3", json_real(n.log_k3)}}},
            {"quadrature_tol", json_real(d.quadrature_tol())}};
}

std::string delta_summary(const DeltaTable& t, std::string_view name, std::string_view ref) {
    std::string s = fmt::format("{} vs {}\n  {:<11} {:>12} {:>12}\n", name, ref, "segment", "delta_p2", "delta_r_n");
    auto pct = [](double v) {
        if (!std::isfinite(v)) return std::string("n/a");
        const double pc = 100.0 * v;
        return fmt::format("{:+.1f}%", std::abs(pc) < 0.05 ? 0.0 : pc);
    };
    for (Segment seg : kSegments) {
        const auto& d = t.by_segment[static_cast<std::size_t>(seg)];
        s += fmt::format("  {:<11} {:>12} {:>12}\n", to_string(seg), pct(d.p2), pct(d.rn));
    }
    s += fmt::format("  {:<11} {:>12} {:>12}\n", "overall", pct(t.overall.p2), pct(t.overall.rn));
    return s;
}

HourlyVolatilitySeries load_series(const std::string& path) { return load_hourly_sigma(path); }

void require_valid(const HourlyVolatilitySeries& s, const std::string& path) {
    if (s.valid_count() == 0) throw DataError(fmt::format("{}: no valid hours", path));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stationary frequency model and FCR-N dimensioning tools", "fcrdim"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out_dir;
    double quad_tol = kDefaultQuadratureTol;
    app.add_option("--out", out_dir, fmt::format("Output directory (default ${} or .)", kOutDirEnv));
    app.add_option("--quad-tol", quad_tol, "Relative quadrature tolerance")->capture_default_str();

    std::function<Outcome()> action;

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Hourly sigma from a raw frequency CSV");
    std::string cal_input;
    std::string cal_window;
    std::string cal_format = "csv";
    CalibrationOptions cal_opts;
    cal->add_option("--input", cal_input, "CSV with header timestamp,frequency_hz")
        ->required()
        ->check(CLI::ExistingFile);
    cal->add_option("--window-start", cal_window, "UTC start of the first hour (ISO 8601)");
    cal->add_option("--coverage", cal_opts.coverage_threshold, "Minimum valid-second share per hour")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cal->add_option("--hours", cal_opts.n_hours, "Hours in the window")->check(CLI::PositiveNumber)->capture_default_str();
    cal->add_option("--format", cal_format, "csv|json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    cal->callback([&] {
        action = [&]() -> Outcome {
            if (!cal_window.empty()) {
                const auto ms = parse_iso8601_ms(cal_window);
                if (!ms || *ms % 1000 != 0) throw ArgumentError(fmt::format("bad --window-start '{}'", cal_window));
                cal_opts.window_start_s = *ms / 1000;
            }
            std::ifstream in(cal_input);
            if (!in) throw DataError(fmt::format("cannot open {}", cal_input));
            FrequencyCsvReader reader(in);
            HourlySigmaAccumulator acc(cal_opts);
            SecondAverager avg([&acc](const SecondBin& b) { acc.push(b); });
            FrequencySample s;
            while (reader.next(s)) avg.push(s);
            avg.finish();
            HourlyVolatilitySeries series = acc.finish();

            const auto& rep = reader.report();
            nlohmann::json skipped = nlohmann::json::array();
            for (std::size_t i = 0; i < rep.skipped.size() && i < 100; ++i) {
                skipped.push_back({{"line", rep.skipped[i].line}, {"message", rep.skipped[i].message}});
            }
            nlohmann::json report = {
                {"input_rows", rep.rows_read},
                {"timestamp_format", rep.format == TimestampFormat::Iso8601 ? "iso8601" : "epoch_ms"},
                {"skipped_rows", rep.skipped.size()},
                {"skipped_examples", std::move(skipped)},
                {"implausible_samples", rep.implausible.size()},
                {"seconds_outside_window", acc.seconds_outside_window()},
                {"hours", series.entries.size()},
                {"valid_hours", series.valid_count()},
                {"coverage_threshold", json_real(series.coverage_threshold)},
                {"sigma_bar", json_real(series.sigma_bar)}};

            Outcome o;
            if (cal_format == "json") {
                o.files.push_back({"hourly_sigma.json", dump(hourly_sigma_to_json(series))});
            } else {
                o.files.push_back({"hourly_sigma.csv", render([&](std::ostream& os) { write_hourly_sigma_csv(os, series); })});
            }
            o.files.push_back({"calibration_report.json", dump(report)});
            o.summary = fmt::format("rows {}  skipped {}  implausible {}\nhours {}  valid {}  sigma_bar {}\n",
                                    rep.rows_read, rep.skipped.size(), rep.implausible.size(), series.entries.size(),
                                    series.valid_count(), format_real(series.sigma_bar));
            return o;
        };
    });

    // synth-sigma
    auto* syn = app.add_subcommand("synth-sigma", "Synthetic lognormal hourly sigma series");
    int syn_hours = kHoursPerYear;
    double syn_mean = 0.04;
    double syn_share = 0.15;
    double syn_threshold = 1.25;
    std::optional<double> syn_dispersion;
    std::uint64_t syn_seed = 7;
    std::string syn_format = "csv";
    syn->add_option("--hours", syn_hours, "Number of hours")->check(CLI::PositiveNumber)->capture_default_str();
    syn->add_option("--mean", syn_mean, "Mean sigma")->check(CLI::PositiveNumber)->capture_default_str();
    syn->add_option("--share-above", syn_share, "Target share of hours above threshold * mean")
        ->capture_default_str();
    syn->add_option("--threshold", syn_threshold, "Threshold as a multiple of the mean")->capture_default_str();
    syn->add_option("--dispersion", syn_dispersion, "Log-scale dispersion (overrides --share-above)");
    syn->add_option("--seed", syn_seed, "Seed")->capture_default_str();
    syn->add_option("--format", syn_format, "csv|json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    syn->callback([&] {
        action = [&]() -> Outcome {
            const double s = syn_dispersion ? *syn_dispersion : lognormal_dispersion_for_share(syn_share, syn_threshold);
            const auto series = synthetic_lognormal_series(syn_hours, syn_mean, s, syn_seed);
            Outcome o;
            if (syn_format == "json") {
                o.files.push_back({"hourly_sigma.json", dump(hourly_sigma_to_json(series))});
            } else {
                o.files.push_back({"hourly_sigma.csv", render([&](std::ostream& os) { write_hourly_sigma_csv(os, series); })});
            }
            o.summary = fmt::format("hours {}  dispersion {}  sigma_bar {}\n", syn_hours, format_real(s),
                                    format_real(series.sigma_bar));
            return o;
        };
    });

    // stationary
    auto* sta = app.add_subcommand("stationary", "Closed-form interval probabilities");
    ReserveConfig sta_cfg;
    int sta_density_points = 0;
    sta->add_option("--rn", sta_cfg.r_n, "FCR-N volume r_N in GW")->capture_default_str();
    sta->add_option("--xd", sta_cfg.x_d, "FCR-D volume x_D in GW")->capture_default_str();
    sta->add_option("--sigma", sta_cfg.sigma, "Diffusion coefficient")->capture_default_str();
    sta->add_option("--density-points", sta_density_points, "Also write density.csv on [-0.6, 0.6]")
        ->check(CLI::NonNegativeNumber);
    sta->callback([&] {
        action = [&]() -> Outcome {
            sta_cfg.validate();
            const auto d = interval_probabilities(sta_cfg, quad_tol);
            Outcome o;
            o.files.push_back({"stationary.json", dump(stationary_json(d))});
            if (sta_density_points > 1) {
                o.files.push_back({"density.csv", render([&](std::ostream& os) {
                                       os << "f_hz,density\n";
                                       for (int i = 0; i < sta_density_points; ++i) {
                                           const double f = -0.6 + 1.2 * i / (sta_density_points - 1);
                                           os << format_real(f) << ',' << format_real(d.density(f)) << '\n';
                                       }
                                   })});
            }
            const auto ex = exceedance(d);
            o.summary = fmt::format("p1..p6 {} {} {} {} {} {}\n2 p2 {}  outside band {}  minutes/year {}\n",
                                    format_real(d.p(1)), format_real(d.p(2)), format_real(d.p(3)),
                                    format_real(d.p(4)), format_real(d.p(5)), format_real(d.p(6)),
                                    format_real(2.0 * d.p(2)), format_real(ex.p_outside_normal_band),
                                    format_real(ex.minutes_per_year));
            return o;
        };
    });

    // simulate
    auto* sim = app.add_subcommand("simulate", "Euler-Maruyama trajectory and occupancy");
    SimulationConfig sim_cfg;
    std::uint64_t sim_stride = 0;
    sim->add_option("--rn", sim_cfg.cfg.r_n, "FCR-N volume r_N in GW")->capture_default_str();
    sim->add_option("--xd", sim_cfg.cfg.x_d, "FCR-D volume x_D in GW")->capture_default_str();
    sim->add_option("--sigma", sim_cfg.cfg.sigma, "Diffusion coefficient")->capture_default_str();
    sim->add_option("--dt", sim_cfg.dt, "Time step")->capture_default_str();
    sim->add_option("--steps", sim_cfg.n_steps, "Number of steps")->capture_default_str();
    sim->add_option("--burn-in", sim_cfg.burn_in_steps, "Steps discarded before occupancy")->capture_default_str();
    sim->add_option("--seed", sim_cfg.seed, "Seed")->capture_default_str();
    sim->add_option("--f0", sim_cfg.f0, "Initial deviation in Hz")->capture_default_str();
    sim->add_option("--trajectory-stride", sim_stride, "Write trajectory.csv every N steps (0: no file)");
    sim->callback([&] {
        action = [&]() -> Outcome {
            sim_cfg.validate();
            OccupancyEstimate est;
            Outcome o;
            if (sim_stride > 0) {
                const auto path = simulate(sim_cfg);
                est = occupancy(path, sim_cfg.burn_in_steps);
                o.files.push_back({"trajectory.csv", render([&](std::ostream& os) {
                                       write_trajectory_csv(os, path, sim_cfg.dt, sim_stride);
                                   })});
            } else {
                est = simulate_occupancy(sim_cfg);
            }
            nlohmann::json frac = nlohmann::json::array();
            nlohmann::json se = nlohmann::json::array();
            nlohmann::json neff = nlohmann::json::array();
            for (std::size_t j = 0; j < 6; ++j) {
                frac.push_back(json_real(est.fractions[j]));
                se.push_back(json_real(est.std_errors[j]));
                neff.push_back(json_real(est.n_effective[j]));
            }
            nlohmann::json j = {{"config",
                                 {{"r_n_gw", json_real(sim_cfg.cfg.r_n)},
                                  {"x_d_gw", json_real(sim_cfg.cfg.x_d)},
                                  {"sigma", json_real(sim_cfg.cfg.sigma)},
                                  {"dt", json_real(sim_cfg.dt)},
                                  {"n_steps", sim_cfg.n_steps},
                                  {"burn_in_steps", sim_cfg.burn_in_steps},
                                  {"seed", sim_cfg.seed},
                                  {"f0", json_real(sim_cfg.f0)}}},
                                {"n_samples", est.n_samples},
                                {"fractions", std::move(frac)},
                                {"std_errors", std::move(se)},
                                {"n_effective", std::move(neff)},
                                {"mean", json_real(est.mean)},
                                {"mean_std_error", json_real(est.mean_std_error)}};
            const auto warning = sim_cfg.step_warning();
            j["warning"] = warning ? nlohmann::json(*warning) : nlohmann::json(nullptr);
            std::string cmp;
            if (sim_cfg.cfg.sigma > 0.0 && sim_cfg.cfg.r_n + sim_cfg.cfg.x_d > 0.0) {
                const auto d = interval_probabilities(sim_cfg.cfg, quad_tol);
                nlohmann::json cf = nlohmann::json::array();
                nlohmann::json z = nlohmann::json::array();
                for (int k = 1; k <= 6; ++k) {
                    const double diff = est.fractions[k - 1] - d.p(k);
                    const double se_k = est.std_errors[k - 1];
                    cf.push_back(json_real(d.p(k)));
                    z.push_back(se_k > 0.0 ? json_real(diff / se_k) : nlohmann::json(nullptr));
                    cmp += fmt::format("  I{}  sim {:<14} closed {:<14} se {}\n", k, format_real(est.fractions[k - 1]),
                                       format_real(d.p(k)), format_real(se_k));
                }
                j["closed_form"] = std::move(cf);
                j["z_scores"] = std::move(z);
            }
            o.files.push_back({"simulation.json", dump(j)});
            o.summary = fmt::format("samples {}  mean {}\n{}", est.n_samples, format_real(est.mean), cmp);
            if (warning) o.summary += "warning: " + *warning + "\n";
            return o;
        };
    });

    // dimension-static
    auto* dim = app.add_subcommand("dimension-static", "Required static r_N over a sigma grid");
    double dim_xd = kDefaultXd;
    std::vector<double> dim_sigmas;
    double dim_sigma_min = 0.02, dim_sigma_max = 0.10, dim_sigma_step = 0.005;
    std::vector<double> dim_targets{0.02, 0.04};
    std::vector<double> dim_rn_grid;
    DimensioningOptions dim_opts;
    dim->add_option("--xd", dim_xd, "FCR-D volume x_D in GW")->capture_default_str();
    dim->add_option("--sigmas", dim_sigmas, "Explicit sigma list")->delimiter(',');
    dim->add_option("--sigma-min", dim_sigma_min)->capture_default_str();
    dim->add_option("--sigma-max", dim_sigma_max)->capture_default_str();
    dim->add_option("--sigma-step", dim_sigma_step)->capture_default_str();
    dim->add_option("--targets", dim_targets, "Maximum exceedance shares, e.g. 0.02,0.04")
        ->delimiter(',')
        ->capture_default_str();
    dim->add_option("--r-max", dim_opts.r_max, "Search cap in GW")->capture_default_str();
    dim->add_option("--tolerance", dim_opts.tolerance, "Absolute r_N tolerance in GW")->capture_default_str();
    dim->add_option("--rn-grid", dim_rn_grid, "Also write exceedance.csv over these r_N")->delimiter(',');
    dim->callback([&] {
        action = [&]() -> Outcome {
            dim_opts.quadrature_tol = quad_tol;
            const auto sigmas = dim_sigmas.empty() ? linear_grid(dim_sigma_min, dim_sigma_max, dim_sigma_step) : dim_sigmas;
            std::vector<SafetyTarget> targets;
            for (double t : dim_targets) {
                SafetyTarget st{t};
                st.validate();
                targets.push_back(st);
            }
            const auto cells = required_rn_curve(sigmas, dim_xd, targets, dim_opts);
            Outcome o;
            o.files.push_back({"required_rn.csv", render([&](std::ostream& os) { write_required_rn_csv(os, cells); })});
            if (!dim_rn_grid.empty()) {
                o.files.push_back({"exceedance.csv", render([&](std::ostream& os) {
                                       os << "sigma,r_n_gw,p_outside,minutes_per_year\n";
                                       for (double s : sigmas) {
                                           for (double r : dim_rn_grid) {
                                               const auto ex = exceedance(ReserveConfig{r, dim_xd, s}, quad_tol);
                                               os << format_real(s) << ',' << format_real(r) << ','
                                                  << format_real(ex.p_outside_normal_band) << ','
                                                  << format_real(ex.minutes_per_year) << '\n';
                                           }
                                       }
                                   })});
            }
            std::size_t failed = 0;
            o.summary = fmt::format("{:<8} {:<8} {}\n", "sigma", "target", "r_n_gw");
            for (const auto& c : cells) {
                if (!c.r_n) ++failed;
                o.summary += fmt::format("{:<8} {:<8} {}\n", format_real(c.sigma), format_real(c.target),
                                         c.r_n ? format_real(*c.r_n) : "failed: " + c.error);
            }
            if (failed > 0) o.summary += fmt::format("{} cells failed\n", failed);
            return o;
        };
    });

    // evaluate-policy
    auto* ev = app.add_subcommand("evaluate-policy", "Per-hour allocation and p2 for one policy");
    PolicyArgs ev_args;
    std::string ev_forecast;
    ev_args.attach(ev, true);
    ev->add_option("--forecast", ev_forecast, "Sigma series used for allocation (default: the realized series)")
        ->check(CLI::ExistingFile);
    ev->callback([&] {
        action = [&]() -> Outcome {
            const auto policy = ev_args.policy();
            const auto series = load_series(ev_args.series_path);
            require_valid(series, ev_args.series_path);
            PolicyEvaluation result;
            if (ev_forecast.empty()) {
                result = evaluate_policy(policy, series, ev_args.x_d, {quad_tol});
            } else {
                const auto fc = load_series(ev_forecast);
                const auto hours = series.valid_hours();
                if (fc.valid_hours() != hours) throw DataError("forecast and realized series have different valid hours");
                result = evaluate_policy(policy, hours, series.valid_sigmas(), fc.valid_sigmas(), series.sigma_bar,
                                         ev_args.x_d, {quad_tol});
            }
            const auto tag = file_tag(policy.kind);
            const PolicyEvaluation* evals[] = {&result};
            Outcome o;
            o.files.push_back({"per_hour_" + tag + ".csv", render([&](std::ostream& os) { write_per_hour_csv(os, result); })});
            o.files.push_back({"evaluation_" + tag + ".json", dump(evaluation_summary_json(result))});
            o.files.push_back({"segment_share_" + tag + ".csv",
                               render([&](std::ostream& os) { write_segment_share_csv(os, evals); })});
            o.summary = fmt::format("{}  hours {}  eta {}  budget {} GWh  sum p2 {}  flagged {}\n", tag,
                                    result.per_hour.size(), format_real(result.eta),
                                    format_real(result.total_budget_gwh), format_real(result.total_p2),
                                    result.flagged_hours);
            return o;
        };
    });

    // compare
    auto* cmp = app.add_subcommand("compare", "Delta table of a policy against a reference");
    PolicyArgs cmp_args;
    cmp_args.kind = "linear";
    std::string cmp_reference = "static";
    std::string cmp_reference_config;
    cmp_args.attach(cmp, true);
    cmp->add_option("--reference", cmp_reference, "Reference policy kind")->capture_default_str();
    cmp->add_option("--reference-config", cmp_reference_config, "Reference policy JSON")->check(CLI::ExistingFile);
    cmp->callback([&] {
        action = [&]() -> Outcome {
            const auto policy = cmp_args.policy();
            PolicyArgs ref_args = cmp_args;
            ref_args.kind = cmp_reference;
            ref_args.config_path = cmp_reference_config;
            const auto ref_policy = ref_args.policy();
            const auto series = load_series(cmp_args.series_path);
            require_valid(series, cmp_args.series_path);
            const auto a = evaluate_policy(policy, series, cmp_args.x_d, {quad_tol});
            const auto b = evaluate_policy(ref_policy, series, cmp_args.x_d, {quad_tol});
            const auto table = compare(a, b);
            const auto tag = file_tag(policy.kind);
            const auto ref_tag = file_tag(ref_policy.kind);
            const PolicyEvaluation* evals[] = {&b, &a};
            Outcome o;
            o.files.push_back({"compare_" + tag + "_vs_" + ref_tag + ".json", dump(delta_table_json(table, a, b))});
            o.files.push_back({"segment_share_" + tag + "_vs_" + ref_tag + ".csv",
                               render([&](std::ostream& os) { write_segment_share_csv(os, evals); })});
            o.files.push_back({"per_hour_" + tag + ".csv", render([&](std::ostream& os) { write_per_hour_csv(os, a); })});
            o.summary = delta_summary(table, tag, ref_tag);
            return o;
        };
    });

    // solve-gamma
    auto* gam = app.add_subcommand("solve-gamma", "ScaleLinear gamma matching a target sum of p2");
    PolicyArgs gam_args;
    std::optional<double> gam_target;
    gam_args.attach(gam, false);
    gam->add_option("--target-total-p2", gam_target, "Target sum of p2 (default: the static policy's)");
    gam->callback([&] {
        action = [&]() -> Outcome {
            gam_args.kind = "scalelinear";
            const auto base = gam_args.policy();
            const auto series = load_series(gam_args.series_path);
            require_valid(series, gam_args.series_path);
            DimensioningPolicy stat = base;
            stat.kind = PolicyKind::Static;
            const auto ref = evaluate_policy(stat, series, gam_args.x_d, {quad_tol});
            const double target = gam_target ? *gam_target : ref.total_p2;
            const auto sol = solve_gamma(series, gam_args.x_d, target, base, {quad_tol});
            DimensioningPolicy scaled = base;
            scaled.gamma = sol.gamma;
            const auto a = evaluate_policy(scaled, series, gam_args.x_d, {quad_tol});
            const auto table = compare(a, ref);
            nlohmann::json j = {{"gamma", json_real(sol.gamma)},
                                {"total_p2", json_real(sol.total_p2)},
                                {"target_total_p2", json_real(sol.target_total_p2)},
                                {"evaluations", sol.evaluations},
                                {"comparison", delta_table_json(table, a, ref)}};
            const PolicyEvaluation* evals[] = {&ref, &a};
            Outcome o;
            o.files.push_back({"gamma.json", dump(j)});
            o.files.push_back({"per_hour_scalelinear.csv", render([&](std::ostream& os) { write_per_hour_csv(os, a); })});
            o.files.push_back({"segment_share_scalelinear_vs_static.csv",
                               render([&](std::ostream& os) { write_segment_share_csv(os, evals); })});
            o.summary = fmt::format("gamma {}  sum p2 {} (target {})  budget {} GWh\n", format_real(sol.gamma),
                                    format_real(sol.total_p2), format_real(target), format_real(a.total_budget_gwh)) +
                        delta_summary(table, "scalelinear", "static");
            return o;
        };
    });

    // sensitivity
    auto* sen = app.add_subcommand("sensitivity", "Delta p2 under multiplicative sigma forecast errors");
    PolicyArgs sen_args;
    std::string sen_law = "both";
    std::string sen_scale = "variance";
    std::vector<double> sen_grid{0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
    std::vector<std::string> sen_policies{"linear", "step"};
    PerturbationSpec sen_spec;
    sen_args.attach(sen, false);
    sen->add_option("--law", sen_law, "threepoint|gaussian|both")
        ->check(CLI::IsMember({"threepoint", "gaussian", "both"}))
        ->capture_default_str();
    sen->add_option("--gaussian-scale", sen_scale, "Gaussian p as stddev or variance")
        ->check(CLI::IsMember({"stddev", "variance"}))
        ->capture_default_str();
    sen->add_option("--p-grid", sen_grid, "Perturbation magnitudes")->delimiter(',')->capture_default_str();
    sen->add_option("--policies", sen_policies, "Policies to perturb")->delimiter(',')->capture_default_str();
    sen->add_option("--repetitions", sen_spec.n_repetitions, "Repetitions per grid point")->capture_default_str();
    sen->add_option("--seed", sen_spec.seed, "Seed")->capture_default_str();
    sen->callback([&] {
        action = [&]() -> Outcome {
            sen_spec.gaussian_scale = parse_gaussian_scale(sen_scale);
            std::vector<DimensioningPolicy> policies;
            for (const auto& k : sen_policies) {
                PolicyArgs a = sen_args;
                a.kind = k;
                auto p = a.policy();
                p.kind = parse_policy_kind(k);
                policies.push_back(p);
            }
            const auto series = load_series(sen_args.series_path);
            require_valid(series, sen_args.series_path);
            std::vector<PerturbationKind> laws;
            if (sen_law != "gaussian") laws.push_back(PerturbationKind::ThreePoint);
            if (sen_law != "threepoint") laws.push_back(PerturbationKind::Gaussian);
            Outcome o;
            for (auto law : laws) {
                PerturbationSpec spec = sen_spec;
                spec.kind = law;
                const auto points = sweep(series, sen_args.x_d, policies, spec, {sen_grid, {quad_tol}});
                o.files.push_back({"sensitivity_" + std::string(to_string(law)) + ".csv",
                                   render([&](std::ostream& os) { write_sweep_csv(os, points); })});
                for (const auto& pt : points) {
                    o.summary += fmt::format("{:<10} p {:<5} {:<10} mean {:+.2f}%  [{:+.2f}%, {:+.2f}%]\n",
                                             to_string(law), format_real(pt.p), to_string(pt.policy),
                                             100.0 * pt.delta_p2_mean, 100.0 * pt.delta_p2_min,
                                             100.0 * pt.delta_p2_max);
                }
            }
            return o;
        };
    });

    auto error_json = [&err](std::string_view kind, std::string_view message) {
        err << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
    };

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        error_json("argument", e.what());
        return kExitArgument;
    }

    try {
        Outcome o = action();
        if (out_dir.empty()) {
            const char* env = std::getenv(kOutDirEnv);
            out_dir = env && *env ? env : ".";
        }
        std::filesystem::path dir(out_dir);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw DataError(fmt::format("cannot create output directory {}: {}", out_dir, ec.message()));
        for (const auto& f : o.files) {
            const auto path = dir / f.name;
            std::ofstream os(path, std::ios::binary | std::ios::trunc);
            os << f.content;
            if (!os) throw DataError(fmt::format("cannot write {}", path.string()));
        }
        out << o.summary;
        for (const auto& f : o.files) out << "wrote " << (dir / f.name).string() << '\n';
        return kExitOk;
    } catch (const Error& e) {
        error_json(to_string(e.kind()), e.what());
        switch (e.kind()) {
            case ErrorKind::Argument:
                return kExitArgument;
            case ErrorKind::Data:
                return kExitData;
            case ErrorKind::Numerical:
                return kExitNumerical;
        }
        return kExitInternal;
    } catch (const std::exception& e) {
        error_json("internal", e.what());
        return kExitInternal;
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace fcr::cli
