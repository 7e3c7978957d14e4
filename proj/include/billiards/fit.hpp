#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace billiards {

enum class DecayModel { power, exponential };

std::string_view to_string(DecayModel m);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double rss = 0.0;
    int n = 0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Two-sided Student-t quantile for confidence `level` with `dof` degrees of freedom.
double student_t_quantile(double level, int dof);

/// Decay fit on log axes. Power model: log y = a + slope*log x (slope is the exponent).
/// Exponential model: log y = a + slope*x (rate = exp(slope)).
struct FitReport {
    DecayModel model = DecayModel::power;
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double ci_low = 0.0;   // 95% interval for the slope
    double ci_high = 0.0;
    int points = 0;
    double x_low = 0.0;
    double x_high = 0.0;
    double rss = 0.0;
    double aic = 0.0;
    double noise_floor = 0.0;

    double rate() const;  // exp(slope), exponential model
};

/// A series of positive magnitudes with standard errors on a grid.
struct DecaySeries {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> se;  // may be empty (treated as zero)
};

/// Fits |y| over x in [x_low, x_high]. Points with |y| at or below the noise floor
/// (2 x median standard error over the window) are dropped; at least 10 must remain,
/// otherwise InsufficientData is thrown. At most `max_points` log-spaced points are used.
FitReport decay_fit(const DecaySeries& s, DecayModel model, double x_low, double x_high,
                    int max_points = 40);

/// Upper envelope of |y| on [x_low, x_high]: the largest |y| in each log-spaced bin
/// [a, a*ratio). Oscillating correlations are fitted through this envelope.
DecaySeries log_envelope(const DecaySeries& s, double x_low, double x_high, double ratio = 1.2);

/// Fits both models on the same points and prefers the smaller AIC.
struct ModelComparison {
    FitReport power;
    FitReport exponential;
    DecayModel preferred = DecayModel::power;
};

ModelComparison compare_models(const DecaySeries& s, double x_low, double x_high, int max_points = 40);

/// Finite-window surrogate for "decays faster than t^-p".
/// The anchor A is the largest |y| over the first log bin [x0, 1.2*x0] (at least 2*se there),
/// taken at x_a. With x_s = 1.2*x_a, every |y(x)| on [x0, x1] must stay below
/// A*min(1, (x_s/x)^p) + 4*se(x) (4 sigma, since the window holds thousands of lags).
/// Where the log envelope (ratio 1.1) of the individually significant lags (|y| > 4 se) has at
/// least 10 points, the power exponent fitted to it must have its upper 95% bound below -p.
/// A series already below noise at the anchor passes but is reported as not resolved.
struct FasterThanPowerCheck {
    bool significant_start = false;
    bool envelope_ok = false;
    bool fit_available = false;
    double fitted_exponent = 0.0;
    double fitted_upper = 0.0;
    bool fit_ok = true;
    double worst_excess = 0.0;  // max over x of (|y| - bound)/se

    bool passed() const { return envelope_ok && fit_ok; }
};

FasterThanPowerCheck faster_than_power(const DecaySeries& s, double p, double x0, double x1);

}  // namespace billiards
