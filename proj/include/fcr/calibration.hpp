#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace fcr {

inline constexpr double kNominalFrequencyHz = 50.0;
inline constexpr double kPlausibleMinHz = 45.0;
inline constexpr double kPlausibleMaxHz = 55.0;
inline constexpr int kHoursPerYear = 8760;

enum class TimestampFormat { Iso8601, EpochMillis };

struct FrequencySample {
    std::int64_t t_ms = 0;  // UTC, milliseconds since the Unix epoch
    double hz = 0.0;
    bool plausible = true;  // inside [45, 55] Hz
};

struct RowIssue {
    std::size_t line = 0;  // 1-based, header is line 1
    std::string message;
};

struct ParseReport {
    TimestampFormat format = TimestampFormat::Iso8601;
    std::size_t rows_read = 0;
    std::vector<RowIssue> skipped;      // malformed rows, not in the series
    std::vector<RowIssue> implausible;  // kept but flagged, excluded from averages
};

struct RawFrequencySeries {
    std::vector<FrequencySample> samples;
    double declared_resolution_s = 0.1;
    ParseReport report;
};

/// Parses `YYYY-MM-DDTHH:MM:SS[.fff][Z]` (UTC) into epoch milliseconds.
std::optional<std::int64_t> parse_iso8601_ms(const std::string& text);
/// `YYYY-MM-DDTHH:MM:SSZ` for a whole-second epoch timestamp.
std::string format_utc_seconds(std::int64_t epoch_seconds);

/// Streaming reader for `timestamp,frequency_hz` files. The timestamp format
/// is detected from the first data row. Malformed rows are skipped and
/// reported; a timestamp that does not strictly increase is fatal (DataError
/// naming the line).
class FrequencyCsvReader {
public:
    explicit FrequencyCsvReader(std::istream& in);

    /// Next accepted sample, or false at end of input.
    bool next(FrequencySample& out);
    const ParseReport& report() const noexcept { return report_; }

private:
    std::istream& in_;
    ParseReport report_;
    std::size_t line_no_ = 1;
    std::optional<TimestampFormat> format_;
    std::optional<std::int64_t> last_t_ms_;
    std::size_t last_line_ = 0;
};

RawFrequencySeries parse_frequency_csv(std::istream& in);

struct SecondBin {
    std::int64_t second = 0;  // epoch seconds
    double mean_hz = 0.0;
    std::uint32_t sample_count = 0;

    bool missing() const noexcept { return sample_count == 0; }
};

/// One bin per wall-clock second from the first to the last sample.
struct DownsampledSeries {
    std::vector<SecondBin> seconds;
};

/// Streaming 1-second averaging. Emits every second of the covered span in
/// order; seconds without (plausible) samples are emitted as missing bins.
class SecondAverager {
public:
    using Sink = std::function<void(const SecondBin&)>;
    explicit SecondAverager(Sink sink);

    void push(const FrequencySample& s);
    void finish();

private:
    void flush_current();

    Sink sink_;
    std::optional<std::int64_t> current_;
    double sum_ = 0.0;
    std::uint32_t count_ = 0;
};

DownsampledSeries downsample_1s(const RawFrequencySeries& raw);

struct HourlySigma {
    int hour_index = 0;               // 1-based from the window start
    std::int64_t hour_start_s = 0;    // epoch seconds
    double sigma = 0.0;               // meaningful only when valid
    double coverage = 0.0;            // valid seconds / 3600
    std::uint32_t increments = 0;     // consecutive valid 1 s pairs used
    bool valid = false;
};

struct HourlyVolatilitySeries {
    std::vector<HourlySigma> entries;
    double sigma_bar = 0.0;  // mean of valid sigma
    double coverage_threshold = 0.9;

    std::size_t valid_count() const;
    std::vector<double> valid_sigmas() const;
    std::vector<int> valid_hours() const;
    /// Recomputes sigma_bar from valid entries.
    void refresh_sigma_bar();
};

struct CalibrationOptions {
    std::optional<std::int64_t> window_start_s;  // default: first sample's hour
    double coverage_threshold = 0.9;
    int n_hours = kHoursPerYear;
};

/// Streaming per-hour realized volatility of 1 s increments:
///   sigma_i = sqrt(sum (F_{k+1} - F_k)^2 / N),  F = f - 50,
/// over the N pairs of consecutive valid seconds inside hour i. Pairs that
/// straddle a missing second or an hour boundary are not used.
class HourlySigmaAccumulator {
public:
    explicit HourlySigmaAccumulator(CalibrationOptions opts = {});

    void push(const SecondBin& bin);
    /// Throws DataError if no hour reaches the coverage threshold.
    HourlyVolatilitySeries finish();

    std::size_t seconds_outside_window() const noexcept { return outside_; }

private:
    struct HourAcc {
        std::uint32_t valid_seconds = 0;
        std::uint32_t pairs = 0;
        double sum_sq = 0.0;
    };

    CalibrationOptions opts_;
    std::optional<std::int64_t> start_;
    std::vector<HourAcc> hours_;  // indexed by hour_index - 1, grown on demand
    std::optional<SecondBin> prev_;
    int first_hour_ = 0;
    std::size_t outside_ = 0;
};

HourlyVolatilitySeries estimate_hourly_sigma(const DownsampledSeries& ds, const CalibrationOptions& opts = {});

/// `hour_index,utc_hour_start,sigma,coverage`; invalid hours leave sigma empty.
void write_hourly_sigma_csv(std::ostream& os, const HourlyVolatilitySeries& series);
nlohmann::json hourly_sigma_to_json(const HourlyVolatilitySeries& series);

/// Reads either serialization back (format chosen by the caller).
HourlyVolatilitySeries read_hourly_sigma_csv(std::istream& in);
HourlyVolatilitySeries hourly_sigma_from_json(const nlohmann::json& j);
/// Loads by file extension (.json, otherwise CSV). Throws DataError.
HourlyVolatilitySeries load_hourly_sigma(const std::string& path);

/// Lognormal dispersion s such that P(X > threshold) = share for
/// X = exp(s Z - s^2/2) (unit mean); the smaller of the two roots.
double lognormal_dispersion_for_share(double share, double threshold);

/// Synthetic year of hourly sigmas, sigma_i = mean * exp(s Z_i - s^2/2), all
/// valid with coverage 1. sigma_bar is the sample mean.
HourlyVolatilitySeries synthetic_lognormal_series(int n_hours, double mean_sigma, double dispersion,
                                                  std::uint64_t seed);

}  // namespace fcr
