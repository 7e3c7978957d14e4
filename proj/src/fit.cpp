#include "billiards/fit.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "billiards/errors.hpp"

namespace billiards {

std::string_view to_string(DecayModel m) { return m == DecayModel::power ? "power" : "exponential"; }

double FitReport::rate() const { return std::exp(slope); }

LinearFit least_squares(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 3) throw InsufficientData("least squares needs at least 3 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw InsufficientData("least squares needs distinct abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - f.intercept - f.slope * x[i];
        f.rss += e * e;
    }
    f.n = static_cast<int>(x.size());
    f.slope_se = std::sqrt(f.rss / (n - 2.0) / sxx);
    return f;
}

double student_t_quantile(double level, int dof)
{
    boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(boost::math::complement(dist, 0.5 * (1.0 - level)));
}

namespace {

std::vector<size_t> usable_points(const DecaySeries& s, double x_low, double x_high, int max_points,
                                  double& floor)
{
    std::vector<size_t> window;
    for (size_t i = 0; i < s.x.size(); ++i)
        if (s.x[i] >= x_low && s.x[i] <= x_high && std::isfinite(s.y[i])) window.push_back(i);

    std::vector<double> ses;
    for (size_t i : window)
        if (!s.se.empty() && std::isfinite(s.se[i])) ses.push_back(s.se[i]);
    floor = 0.0;
    if (!ses.empty()) {
        std::nth_element(ses.begin(), ses.begin() + static_cast<long>(ses.size() / 2), ses.end());
        floor = 2.0 * ses[ses.size() / 2];
    }

    std::vector<size_t> kept;
    for (size_t i : window)
        if (std::abs(s.y[i]) > floor && s.y[i] != 0.0) kept.push_back(i);
    if (kept.size() < 10) {
        std::ostringstream msg;
        msg << "only " << kept.size() << " points above the noise floor " << floor << " on ["
            << x_low << ", " << x_high << "]";
        throw InsufficientData(msg.str());
    }
    if (static_cast<int>(kept.size()) <= max_points) return kept;

    // Thin to log-spaced abscissae so that the long end does not dominate.
    std::vector<size_t> thin;
    const double lo = std::log(std::max(s.x[kept.front()], 1e-300));
    const double hi = std::log(s.x[kept.back()]);
    size_t j = 0;
    for (int m = 0; m < max_points; ++m) {
        const double target = lo + (hi - lo) * m / (max_points - 1);
        while (j + 1 < kept.size() && std::log(s.x[kept[j]]) < target) ++j;
        if (thin.empty() || thin.back() != kept[j]) thin.push_back(kept[j]);
    }
    return thin;
}

FitReport fit_on(const DecaySeries& s, const std::vector<size_t>& idx, DecayModel model, double floor)
{
    std::vector<double> x, y;
    for (size_t i : idx) {
        x.push_back(model == DecayModel::power ? std::log(s.x[i]) : s.x[i]);
        y.push_back(std::log(std::abs(s.y[i])));
    }
    const LinearFit lf = least_squares(x, y);
    FitReport r;
    r.model = model;
    r.slope = lf.slope;
    r.intercept = lf.intercept;
    r.slope_se = lf.slope_se;
    const double q = student_t_quantile(0.95, lf.n - 2);
    r.ci_low = lf.slope - q * lf.slope_se;
    r.ci_high = lf.slope + q * lf.slope_se;
    r.points = lf.n;
    r.x_low = s.x[idx.front()];
    r.x_high = s.x[idx.back()];
    r.rss = lf.rss;
    const double n = lf.n;
    r.aic = n * std::log(std::max(lf.rss, std::numeric_limits<double>::min()) / n) + 2.0 * 2.0;
    r.noise_floor = floor;
    return r;
}

}  // namespace

FitReport decay_fit(const DecaySeries& s, DecayModel model, double x_low, double x_high, int max_points)
{
    double floor = 0.0;
    const auto idx = usable_points(s, x_low, x_high, max_points, floor);
    return fit_on(s, idx, model, floor);
}

DecaySeries log_envelope(const DecaySeries& s, double x_low, double x_high, double ratio)
{
    if (!(ratio > 1.0) || !(x_low > 0.0)) throw std::invalid_argument("log_envelope needs ratio > 1 and x_low > 0");
    DecaySeries out;
    size_t i = 0;
    for (double a = x_low; a < x_high; a *= ratio) {
        const double b = std::min(a * ratio, x_high * (1.0 + 1e-12));
        long best = -1;
        while (i < s.x.size() && s.x[i] < a) ++i;
        for (; i < s.x.size() && s.x[i] < b; ++i)
            if (best < 0 || std::abs(s.y[i]) > std::abs(s.y[static_cast<size_t>(best)])) best = static_cast<long>(i);
        if (best < 0) continue;
        const auto k = static_cast<size_t>(best);
        out.x.push_back(s.x[k]);
        out.y.push_back(std::abs(s.y[k]));
        out.se.push_back(s.se.empty() ? 0.0 : s.se[k]);
    }
    return out;
}

ModelComparison compare_models(const DecaySeries& s, double x_low, double x_high, int max_points)
{
    double floor = 0.0;
    const auto idx = usable_points(s, x_low, x_high, max_points, floor);
    ModelComparison c;
    c.power = fit_on(s, idx, DecayModel::power, floor);
    c.exponential = fit_on(s, idx, DecayModel::exponential, floor);
    c.preferred = c.exponential.aic < c.power.aic ? DecayModel::exponential : DecayModel::power;
    return c;
}

FasterThanPowerCheck faster_than_power(const DecaySeries& s, double p, double x0, double x1)
{
    FasterThanPowerCheck c;
    auto se_at = [&](size_t i) { return s.se.empty() ? 0.0 : s.se[i]; };
    size_t i0 = s.x.size();
    for (size_t i = 0; i < s.x.size(); ++i)
        if (s.x[i] >= x0) {
            i0 = i;
            break;
        }
    if (i0 == s.x.size()) return c;
    // Anchor on the largest |y| in the first log bin [x0, 1.2 x0], so an oscillating series
    // is not anchored at a zero crossing.
    size_t ia = i0;
    for (size_t i = i0; i < s.x.size() && s.x[i] < 1.2 * s.x[i0]; ++i)
        if (std::abs(s.y[i]) > std::abs(s.y[ia])) ia = i;
    c.significant_start = std::abs(s.y[ia]) > 2.0 * se_at(ia);
    const double a = std::max(std::abs(s.y[ia]), 2.0 * se_at(ia));
    // The decay of the bound starts one bin after the anchor: right after a peak an
    // oscillating series is flat, whatever its envelope does.
    const double xs = 1.2 * s.x[ia];
    c.envelope_ok = true;
    c.worst_excess = -std::numeric_limits<double>::infinity();
    for (size_t i = i0; i < s.x.size() && s.x[i] <= x1; ++i) {
        const double bound = s.x[i] <= xs ? a : a * std::pow(xs / s.x[i], p);
        const double se = se_at(i);
        const double excess = se > 0.0 ? (std::abs(s.y[i]) - bound) / se : std::abs(s.y[i]) - bound;
        c.worst_excess = std::max(c.worst_excess, excess);
        if (std::abs(s.y[i]) > bound + 4.0 * se) c.envelope_ok = false;
    }
    // Only pointwise significant lags enter the fit, through their log envelope; a window of
    // pure noise has none.
    DecaySeries sig;
    for (size_t i = i0; i < s.x.size() && s.x[i] <= x1; ++i)
        if (std::abs(s.y[i]) > 4.0 * se_at(i)) {
            sig.x.push_back(s.x[i]);
            sig.y.push_back(s.y[i]);
            sig.se.push_back(se_at(i));
        }
    try {
        const FitReport f = decay_fit(log_envelope(sig, x0, x1, 1.1), DecayModel::power, x0, x1);
        c.fit_available = true;
        c.fitted_exponent = f.slope;
        c.fitted_upper = f.ci_high;
        c.fit_ok = f.ci_high < -p;
    } catch (const InsufficientData&) {
        c.fit_available = false;
        c.fit_ok = true;  // already below the noise floor on most of the window
    }
    return c;
}

}  // namespace billiards
