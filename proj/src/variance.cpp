#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "billiards/errors.hpp"
#include "billiards/stats.hpp"

namespace billiards {

namespace {

struct StreamMoments {
    std::int64_t count = 0;
    std::int64_t discarded = 0;
    std::vector<double> sum, sum_sq;
};

// Integrals of v along phi_t(p) for t in [0, T_j], all horizons in one pass.
std::vector<double> integrate_along(const BilliardTable& table, const Observable& v, FlowPoint p,
                                    const std::vector<double>& horizons)
{
    std::vector<double> out(horizons.size());
    PhasePoint x = p.base;
    MapStep st = advance(table, x);
    Vec2 q = position(table, x);
    Vec2 w = velocity(table, x);
    q = q + p.u * w;
    double len = st.flight - p.u;
    double elapsed = 0.0, total = 0.0;
    size_t j = 0;
    for (;;) {
        while (j < horizons.size() && elapsed + len >= horizons[j]) {
            out[j] = total + v.integrate_chord(q, w, horizons[j] - elapsed);
            ++j;
        }
        if (j == horizons.size()) return out;
        total += v.integrate_chord(q, w, len);
        elapsed += len;
        x = st.next;
        st = advance(table, x);
        q = position(table, x);
        w = velocity(table, x);
        len = st.flight;
    }
}

}  // namespace

VarianceGrowth variance_growth(const BilliardTable& table, const Observable& v, const VarianceOptions& opt)
{
    if (!v.position_only()) throw std::invalid_argument("variance growth needs a position-only observable");
    std::vector<double> horizons = opt.horizons;
    std::sort(horizons.begin(), horizons.end());
    if (horizons.empty() || horizons.front() <= 0.0) throw std::invalid_argument("horizons must be positive");
    const size_t nh = horizons.size();

    auto parts = run_streams<StreamMoments>(opt.run, [&](int stream) {
        StreamRng rng(opt.run.seed, static_cast<std::uint64_t>(stream));
        StreamMoments m;
        m.sum.assign(nh, 0.0);
        m.sum_sq.assign(nh, 0.0);
        const std::int64_t want = stream_share(opt.ensemble, opt.run.streams, stream);
        while (m.count < want) {
            try {
                const auto ints = integrate_along(table, v, flow_measure_sample(table, rng), horizons);
                for (size_t j = 0; j < nh; ++j) {
                    m.sum[j] += ints[j];
                    m.sum_sq[j] += ints[j] * ints[j];
                }
                ++m.count;
            } catch (const TrajectoryError&) {
                ++m.discarded;
            }
        }
        return m;
    });

    VarianceGrowth g;
    g.horizon = horizons;
    g.variance.assign(nh, 0.0);
    g.se.assign(nh, 0.0);
    std::vector<double> sum(nh, 0.0), sum_sq(nh, 0.0);
    for (const auto& m : parts) {
        g.ensemble += m.count;
        g.discarded += m.discarded;
        for (size_t j = 0; j < nh; ++j) {
            sum[j] += m.sum[j];
            sum_sq[j] += m.sum_sq[j];
        }
    }
    const double n = static_cast<double>(g.ensemble);
    if (g.ensemble < 2) throw InsufficientData("variance needs at least two trajectories");
    for (size_t j = 0; j < nh; ++j) {
        const double mean = sum[j] / n;
        g.variance[j] = (sum_sq[j] - n * mean * mean) / (n - 1.0);
        // Batch means over streams.
        std::vector<double> est;
        for (const auto& m : parts) {
            if (m.count < 2) continue;
            const double c = static_cast<double>(m.count);
            const double mu = m.sum[j] / c;
            est.push_back((m.sum_sq[j] - c * mu * mu) / (c - 1.0));
        }
        if (est.size() >= 2) {
            double mu = 0.0;
            for (double e : est) mu += e;
            mu /= static_cast<double>(est.size());
            double ss = 0.0;
            for (double e : est) ss += (e - mu) * (e - mu);
            g.se[j] = std::sqrt(ss / static_cast<double>(est.size() - 1) / static_cast<double>(est.size()));
        }
    }
    fit_variance_models(g);
    return g;
}

namespace {

// Weighted least squares y = a*x + b; returns chi^2.
double weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& se, double& a, double& b)
{
    double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double w = se[i] > 0.0 ? 1.0 / (se[i] * se[i]) : 1.0;
        s += w;
        sx += w * x[i];
        sy += w * y[i];
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * y[i];
    }
    const double det = s * sxx - sx * sx;
    if (det == 0.0) throw InsufficientData("degenerate variance fit");
    a = (s * sxy - sx * sy) / det;
    b = (sxx * sy - sx * sxy) / det;
    double chi2 = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double w = se[i] > 0.0 ? 1.0 / (se[i] * se[i]) : 1.0;
        const double e = y[i] - a * x[i] - b;
        chi2 += w * e * e;
    }
    return chi2;
}

}  // namespace

void fit_variance_models(VarianceGrowth& g)
{
    if (g.horizon.size() < 3) throw InsufficientData("variance fits need at least 3 horizons");
    std::vector<double> tlogt;
    for (double t : g.horizon) tlogt.push_back(t * std::log(t));
    g.linear_chi2 = weighted_line(g.horizon, g.variance, g.se, g.linear_a, g.linear_b);
    g.tlogt_chi2 = weighted_line(tlogt, g.variance, g.se, g.tlogt_c, g.tlogt_b);
    g.preferred = g.linear_chi2 <= g.tlogt_chi2 ? "linear" : "tlogt";
    // A chi^2 gap below 4 is within two standard deviations of model noise.
    g.discriminating = std::abs(g.linear_chi2 - g.tlogt_chi2) >= 4.0;
}

}  // namespace billiards
