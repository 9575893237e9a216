#include "fcr/calibration.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>

#include "fcr/errors.hpp"
#include "fcr/random.hpp"
#include "fcr/report.hpp"

namespace fcr {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool all_digits(const std::string& s, std::size_t from = 0) {
    if (s.size() <= from) return false;
    return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(from), s.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::optional<std::int64_t> parse_epoch_ms(const std::string& s) {
    const std::size_t from = (!s.empty() && s[0] == '-') ? 1 : 0;
    if (!all_digits(s, from) || s.size() - from > 18) return std::nullopt;
    return std::strtoll(s.c_str(), nullptr, 10);
}

std::optional<double> parse_real(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

int read_fixed(const std::string& s, std::size_t pos, std::size_t len, bool& ok) {
    if (pos + len > s.size()) {
        ok = false;
        return 0;
    }
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
            ok = false;
            return 0;
        }
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

}  // namespace

std::optional<std::int64_t> parse_iso8601_ms(const std::string& text) {
    const std::string& s = text;
    // YYYY-MM-DDTHH:MM:SS is 19 characters.
    if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' ||
        s[16] != ':') {
        return std::nullopt;
    }
    bool ok = true;
    const int year = read_fixed(s, 0, 4, ok);
    const int month = read_fixed(s, 5, 2, ok);
    const int day = read_fixed(s, 8, 2, ok);
    const int hour = read_fixed(s, 11, 2, ok);
    const int minute = read_fixed(s, 14, 2, ok);
    const int second = read_fixed(s, 17, 2, ok);
    if (!ok || hour > 23 || minute > 59 || second > 59) return std::nullopt;

    std::size_t pos = 19;
    int millis = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        const std::size_t frac_start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::size_t digits = pos - frac_start;
        if (digits == 0) return std::nullopt;
        for (std::size_t i = 0; i < 3; ++i) {
            millis = millis * 10 + (i < digits ? s[frac_start + i] - '0' : 0);
        }
    }
    const std::string zone = s.substr(pos);
    if (!(zone.empty() || zone == "Z" || zone == "+00:00")) return std::nullopt;

    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) return std::nullopt;
    const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
    return ((days * 24 + hour) * 60 + minute) * 60'000LL + second * 1000LL + millis;
}

std::string format_utc_seconds(std::int64_t epoch_seconds) {
    using namespace std::chrono;
    const std::int64_t days = floor_div(epoch_seconds, 86400);
    const std::int64_t rem = epoch_seconds - days * 86400;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 3600,
                       (rem / 60) % 60, rem % 60);
}

FrequencyCsvReader::FrequencyCsvReader(std::istream& in) : in_(in) {
    std::string header;
    if (!std::getline(in_, header)) throw DataError("frequency csv: empty input, expected header");
    header = trim(header);
    std::string lowered;
    std::transform(header.begin(), header.end(), std::back_inserter(lowered),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lowered != "timestamp,frequency_hz") {
        throw DataError(fmt::format("frequency csv: line 1: expected header 'timestamp,frequency_hz', got '{}'",
                                    header));
    }
}

bool FrequencyCsvReader::next(FrequencySample& out) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        line = trim(line);
        if (line.empty()) continue;
        ++report_.rows_read;

        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            report_.skipped.push_back({line_no_, "expected two fields"});
            continue;
        }
        const std::string ts = trim(line.substr(0, comma));
        const std::string fq = trim(line.substr(comma + 1));

        std::optional<std::int64_t> t;
        if (!format_) {
            if (auto ms = parse_epoch_ms(ts)) {
                format_ = TimestampFormat::EpochMillis;
                t = ms;
            } else if (auto iso = parse_iso8601_ms(ts)) {
                format_ = TimestampFormat::Iso8601;
                t = iso;
            }
            if (format_) report_.format = *format_;
        } else {
            t = *format_ == TimestampFormat::EpochMillis ? parse_epoch_ms(ts) : parse_iso8601_ms(ts);
        }
        if (!t) {
            report_.skipped.push_back({line_no_, fmt::format("unparseable timestamp '{}'", ts)});
            continue;
        }
        const auto hz = parse_real(fq);
        if (!hz) {
            report_.skipped.push_back({line_no_, fmt::format("invalid frequency '{}'", fq)});
            continue;
        }
        if (last_t_ms_ && *t <= *last_t_ms_) {
            throw DataError(fmt::format("frequency csv: line {}: timestamp '{}' does not increase (previous at line {})",
                                        line_no_, ts, last_line_));
        }
        last_t_ms_ = *t;
        last_line_ = line_no_;

        out.t_ms = *t;
        out.hz = *hz;
        out.plausible = *hz >= kPlausibleMinHz && *hz <= kPlausibleMaxHz;
        if (!out.plausible) {
            report_.implausible.push_back({line_no_, fmt::format("frequency {} Hz outside [45, 55]", *hz)});
        }
        return true;
    }
    return false;
}

RawFrequencySeries parse_frequency_csv(std::istream& in) {
    FrequencyCsvReader reader(in);
    RawFrequencySeries raw;
    FrequencySample s;
    while (reader.next(s)) raw.samples.push_back(s);
    raw.report = reader.report();
    return raw;
}

SecondAverager::SecondAverager(Sink sink) : sink_(std::move(sink)) {}

void SecondAverager::flush_current() {
    SecondBin bin;
    bin.second = *current_;
    bin.sample_count = count_;
    bin.mean_hz = count_ > 0 ? sum_ / count_ : 0.0;
    sink_(bin);
    sum_ = 0.0;
    count_ = 0;
}

void SecondAverager::push(const FrequencySample& s) {
    const std::int64_t sec = floor_div(s.t_ms, 1000);
    if (!current_) {
        current_ = sec;
    } else if (sec > *current_) {
        flush_current();
        for (std::int64_t gap = *current_ + 1; gap < sec; ++gap) sink_(SecondBin{gap, 0.0, 0});
        current_ = sec;
    } else if (sec < *current_) {
        throw DataError("downsample: samples are not in time order");
    }
    if (s.plausible) {
        sum_ += s.hz;
        ++count_;
    }
}

void SecondAverager::finish() {
    if (current_) flush_current();
    current_.reset();
}

DownsampledSeries downsample_1s(const RawFrequencySeries& raw) {
    DownsampledSeries ds;
    SecondAverager avg([&ds](const SecondBin& b) { ds.seconds.push_back(b); });
    for (const auto& s : raw.samples) avg.push(s);
    avg.finish();
    return ds;
}

std::size_t HourlyVolatilitySeries::valid_count() const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.valid; }));
}

std::vector<double> HourlyVolatilitySeries::valid_sigmas() const {
    std::vector<double> out;
    for (const auto& e : entries) {
        if (e.valid) out.push_back(e.sigma);
    }
    return out;
}

std::vector<int> HourlyVolatilitySeries::valid_hours() const {
    std::vector<int> out;
    for (const auto& e : entries) {
        if (e.valid) out.push_back(e.hour_index);
    }
    return out;
}

void HourlyVolatilitySeries::refresh_sigma_bar() {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& e : entries) {
        if (e.valid) {
            sum += e.sigma;
            ++n;
        }
    }
    sigma_bar = n > 0 ? sum / static_cast<double>(n) : 0.0;
}

HourlySigmaAccumulator::HourlySigmaAccumulator(CalibrationOptions opts) : opts_(opts) {
    if (!(opts_.coverage_threshold >= 0.0 && opts_.coverage_threshold <= 1.0)) {
        throw ArgumentError("calibration: coverage threshold must lie in [0, 1]");
    }
    if (opts_.n_hours <= 0) throw ArgumentError("calibration: n_hours must be positive");
    start_ = opts_.window_start_s;
}

void HourlySigmaAccumulator::push(const SecondBin& bin) {
    if (!start_) start_ = floor_div(bin.second, 3600) * 3600;
    const std::int64_t offset = bin.second - *start_;
    if (offset < 0 || offset >= static_cast<std::int64_t>(opts_.n_hours) * 3600) {
        ++outside_;
        prev_.reset();
        return;
    }
    const auto h = static_cast<std::size_t>(offset / 3600);
    if (hours_.empty()) first_hour_ = static_cast<int>(h);
    if (hours_.size() <= h) hours_.resize(h + 1);

    if (!bin.missing()) {
        HourAcc& acc = hours_[h];
        ++acc.valid_seconds;
        if (prev_ && !prev_->missing() && prev_->second == bin.second - 1 &&
            floor_div(prev_->second - *start_, 3600) == static_cast<std::int64_t>(h)) {
            const double d = (bin.mean_hz - kNominalFrequencyHz) - (prev_->mean_hz - kNominalFrequencyHz);
            acc.sum_sq += d * d;
            ++acc.pairs;
        }
    }
    prev_ = bin;
}

HourlyVolatilitySeries HourlySigmaAccumulator::finish() {
    HourlyVolatilitySeries out;
    out.coverage_threshold = opts_.coverage_threshold;
    for (std::size_t h = static_cast<std::size_t>(first_hour_); h < hours_.size(); ++h) {
        const HourAcc& acc = hours_[h];
        HourlySigma e;
        e.hour_index = static_cast<int>(h) + 1;
        e.hour_start_s = *start_ + static_cast<std::int64_t>(h) * 3600;
        e.coverage = static_cast<double>(acc.valid_seconds) / 3600.0;
        e.increments = acc.pairs;
        e.valid = e.coverage >= opts_.coverage_threshold && acc.pairs > 0;
        e.sigma = e.valid ? std::sqrt(acc.sum_sq / static_cast<double>(acc.pairs)) : 0.0;
        out.entries.push_back(e);
    }
    if (out.valid_count() == 0) {
        throw DataError(fmt::format("calibration: no hour reaches {}% coverage", 100.0 * opts_.coverage_threshold));
    }
    out.refresh_sigma_bar();
    return out;
}

HourlyVolatilitySeries estimate_hourly_sigma(const DownsampledSeries& ds, const CalibrationOptions& opts) {
    HourlySigmaAccumulator acc(opts);
    for (const auto& b : ds.seconds) acc.push(b);
    return acc.finish();
}

void write_hourly_sigma_csv(std::ostream& os, const HourlyVolatilitySeries& series) {
    os << "hour_index,utc_hour_start,sigma,coverage\n";
    for (const auto& e : series.entries) {
        os << e.hour_index << ',' << format_utc_seconds(e.hour_start_s) << ','
           << (e.valid ? format_real(e.sigma) : std::string{}) << ',' << format_real(e.coverage) << '\n';
    }
}

nlohmann::json hourly_sigma_to_json(const HourlyVolatilitySeries& series) {
    nlohmann::json hours = nlohmann::json::array();
    for (const auto& e : series.entries) {
        hours.push_back({{"hour_index", e.hour_index},
                         {"utc_hour_start", format_utc_seconds(e.hour_start_s)},
                         {"sigma", e.valid ? json_real(e.sigma) : nlohmann::json(nullptr)},
                         {"coverage", json_real(e.coverage)},
                         {"increments", e.increments},
                         {"valid", e.valid}});
    }
    return {{"sigma_bar", json_real(series.sigma_bar)},
            {"coverage_threshold", json_real(series.coverage_threshold)},
            {"valid_hours", series.valid_count()},
            {"hours", std::move(hours)}};
}

HourlyVolatilitySeries read_hourly_sigma_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != "hour_index,utc_hour_start,sigma,coverage") {
        throw DataError("sigma csv: line 1: expected header 'hour_index,utc_hour_start,sigma,coverage'");
    }
    HourlyVolatilitySeries out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(trim(field));
        if (line.back() == ',') fields.emplace_back();
        if (fields.size() != 4) throw DataError(fmt::format("sigma csv: line {}: expected 4 fields", line_no));

        HourlySigma e;
        const auto idx = parse_epoch_ms(fields[0]);
        const auto start = parse_iso8601_ms(fields[1]);
        const auto cov = parse_real(fields[3]);
        if (!idx || !start || !cov) throw DataError(fmt::format("sigma csv: line {}: malformed row", line_no));
        e.hour_index = static_cast<int>(*idx);
        e.hour_start_s = floor_div(*start, 1000);
        e.coverage = *cov;
        if (!fields[2].empty()) {
            const auto sigma = parse_real(fields[2]);
            if (!sigma || *sigma < 0.0) throw DataError(fmt::format("sigma csv: line {}: invalid sigma", line_no));
            e.sigma = *sigma;
            e.valid = true;
        }
        out.entries.push_back(e);
    }
    if (out.valid_count() == 0) throw DataError("sigma csv: no valid hours");
    out.refresh_sigma_bar();
    return out;
}

HourlyVolatilitySeries hourly_sigma_from_json(const nlohmann::json& j) {
    HourlyVolatilitySeries out;
    try {
        if (j.contains("coverage_threshold") && j["coverage_threshold"].is_number()) {
            out.coverage_threshold = j["coverage_threshold"].get<double>();
        }
        for (const auto& h : j.at("hours")) {
            HourlySigma e;
            e.hour_index = h.at("hour_index").get<int>();
            const auto start = parse_iso8601_ms(h.at("utc_hour_start").get<std::string>());
            if (!start) throw DataError("sigma json: bad utc_hour_start");
            e.hour_start_s = floor_div(*start, 1000);
            e.coverage = h.at("coverage").get<double>();
            if (h.contains("increments")) e.increments = h["increments"].get<std::uint32_t>();
            if (!h.at("sigma").is_null()) {
                e.sigma = h["sigma"].get<double>();
                e.valid = h.value("valid", true);
            }
            out.entries.push_back(e);
        }
    } catch (const nlohmann::json::exception& ex) {
        throw DataError(fmt::format("sigma json: {}", ex.what()));
    }
    if (out.valid_count() == 0) throw DataError("sigma json: no valid hours");
    out.refresh_sigma_bar();
    return out;
}

HourlyVolatilitySeries load_hourly_sigma(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open sigma series '{}'", path));
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& ex) {
            throw DataError(fmt::format("sigma json '{}': {}", path, ex.what()));
        }
        return hourly_sigma_from_json(j);
    }
    return read_hourly_sigma_csv(in);
}

double lognormal_dispersion_for_share(double share, double threshold) {
    if (!(threshold > 1.0)) throw ArgumentError("lognormal dispersion: threshold must exceed 1");
    const double log_t = std::log(threshold);
    auto tail = [log_t](double s) { return 0.5 * boost::math::erfc((log_t + 0.5 * s * s) / (s * std::sqrt(2.0))); };
    const double s_max = std::sqrt(2.0 * log_t);
    if (!(share > 0.0 && share < tail(s_max))) {
        throw ArgumentError(fmt::format("lognormal dispersion: share must lie in (0, {})", tail(s_max)));
    }
    std::uintmax_t iters = 200;
    const auto [lo, hi] = boost::math::tools::toms748_solve([&](double s) { return tail(s) - share; }, 1e-9, s_max,
                                                            boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (lo + hi);
}

HourlyVolatilitySeries synthetic_lognormal_series(int n_hours, double mean_sigma, double dispersion,
                                                  std::uint64_t seed) {
    if (n_hours <= 0 || !(mean_sigma > 0.0) || !(dispersion >= 0.0)) {
        throw ArgumentError("synthetic series: need n_hours > 0, mean_sigma > 0, dispersion >= 0");
    }
    Engine engine(seed);
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    HourlyVolatilitySeries out;
    out.entries.reserve(static_cast<std::size_t>(n_hours));
    for (int i = 0; i < n_hours; ++i) {
        HourlySigma e;
        e.hour_index = i + 1;
        e.hour_start_s = static_cast<std::int64_t>(i) * 3600;
        e.sigma = mean_sigma * std::exp(dispersion * normal(engine) - 0.5 * dispersion * dispersion);
        e.coverage = 1.0;
        e.increments = 3599;
        e.valid = true;
        out.entries.push_back(e);
    }
    out.refresh_sigma_bar();
    return out;
}

}  // namespace fcr
