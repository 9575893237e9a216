#pragma once

#include <array>

namespace fcr {

/// Reserve obligations and noise level for one hour.
///
/// `r_n` and `x_d` are the FCR-N and FCR-D obligations in GW and enter the
/// drift directly as reversal rates (the numeric convention of the model).
/// Only the ratios r_n / sigma^2 and x_d / sigma^2 affect stationary quantities.
struct ReserveConfig {
    double r_n = 0.6;
    double x_d = 1.45;
    double sigma = 0.04;

    /// Throws ArgumentError unless r_n >= 0, x_d >= 0, sigma > 0 and all finite.
    void validate() const;
};

/// Interval partition of the shifted frequency (Hz):
///   I1 = (-inf,-0.5)  I2 = [-0.5,-0.1)  I3 = [-0.1,0)
///   I4 = [0,0.1]      I5 = (0.1,0.5]    I6 = (0.5,inf)
/// f = 0 is assigned to I4 (measure zero).
inline constexpr std::array<double, 5> kIntervalBoundaries{-0.5, -0.1, 0.0, 0.1, 0.5};
inline constexpr int kIntervalCount = 6;

/// Normal-band half width in Hz.
inline constexpr double kNormalBand = 0.1;

/// Index 1..6 of the interval containing f.
int interval_of(double f) noexcept;

/// Piecewise mean-reversal rate; even and continuous in f, nonnegative.
double alpha(const ReserveConfig& cfg, double f) noexcept;

/// Drift -alpha(f) * f of the frequency diffusion.
double drift(const ReserveConfig& cfg, double f) noexcept;

}  // namespace fcr
