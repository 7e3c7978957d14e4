#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "billiards/errors.hpp"
#include "billiards/stats.hpp"

namespace billiards {

namespace {

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftBuffers {
    size_t n;
    double* real;
    fftw_complex* a;
    fftw_complex* b;
    fftw_plan forward;
    fftw_plan backward;

    explicit FftBuffers(size_t size) : n(size)
    {
        real = fftw_alloc_real(n);
        a = fftw_alloc_complex(n / 2 + 1);
        b = fftw_alloc_complex(n / 2 + 1);
        std::lock_guard<std::mutex> lock(planner_mutex());
        forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), real, a, FFTW_ESTIMATE);
        backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), a, real, FFTW_ESTIMATE);
    }
    ~FftBuffers()
    {
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            fftw_destroy_plan(forward);
            fftw_destroy_plan(backward);
        }
        fftw_free(real);
        fftw_free(a);
        fftw_free(b);
    }
    FftBuffers(const FftBuffers&) = delete;
    FftBuffers& operator=(const FftBuffers&) = delete;
};

void load(FftBuffers& f, std::span<const double> x, fftw_complex* out)
{
    std::fill(f.real, f.real + f.n, 0.0);
    std::copy(x.begin(), x.end(), f.real);
    fftw_execute_dft_r2c(f.forward, f.real, out);
}

}  // namespace

std::vector<double> lag_products(std::span<const double> v, std::span<const double> w, size_t lags)
{
    if (v.size() != w.size()) throw std::invalid_argument("lag_products: length mismatch");
    const size_t n = v.size();
    lags = std::min(lags, n);
    std::vector<double> out(lags, 0.0);
    if (n == 0 || lags == 0) return out;
    size_t size = 1;
    while (size < n + lags) size <<= 1;
    FftBuffers f(size);
    load(f, v, f.a);
    const bool same = v.data() == w.data();
    if (!same) load(f, w, f.b);
    const fftw_complex* W = same ? f.a : f.b;
    for (size_t i = 0; i < size / 2 + 1; ++i) {
        // conj(V) * W
        const double re = f.a[i][0] * W[i][0] + f.a[i][1] * W[i][1];
        const double im = f.a[i][0] * W[i][1] - f.a[i][1] * W[i][0];
        f.a[i][0] = re;
        f.a[i][1] = im;
    }
    fftw_execute_dft_c2r(f.backward, f.a, f.real);
    const double scale = 1.0 / static_cast<double>(size);
    for (size_t k = 0; k < lags; ++k) out[k] = f.real[k] * scale;
    return out;
}

std::vector<double> lag_products_direct(std::span<const double> v, std::span<const double> w, size_t lags)
{
    if (v.size() != w.size()) throw std::invalid_argument("lag_products: length mismatch");
    lags = std::min(lags, v.size());
    std::vector<double> out(lags, 0.0);
    for (size_t k = 0; k < lags; ++k)
        for (size_t i = 0; i + k < v.size(); ++i) out[k] += v[i] * w[i + k];
    return out;
}

CorrelationSeries to_series(const LagAccumulator& acc, std::span<const double> lags)
{
    CorrelationSeries s;
    s.lag.assign(lags.begin(), lags.end());
    for (size_t k = 0; k < acc.lags(); ++k) {
        s.rho.push_back(acc.estimate(k));
        s.se.push_back(acc.standard_error(k));
    }
    s.samples = acc.count;
    s.discarded = acc.discarded;
    s.streams = static_cast<int>(acc.batches.size());
    return s;
}

// ---------------------------------------------------------------------------

LagAccumulator map_correlation_stream(const CrossSection& section, const Observable& v,
                                      const Observable& w, const MapCorrelationOptions& opt, int stream)
{
    const BilliardTable& table = section.table();
    const size_t L = static_cast<size_t>(opt.max_lag) + 1;
    StreamRng rng(opt.run.seed, static_cast<std::uint64_t>(stream));
    const std::int64_t target = stream_share(opt.collisions, opt.run.streams, stream);

    LagAccumulator::Batch b;
    b.lag_sum.assign(L, 0.0);
    b.lag_count.assign(L, 0);
    std::vector<double> ring(2 * L, 0.0);
    std::int64_t discards = 0;
    const bool full = section.kind() == SectionKind::full;

    while (b.count < target) {
        try {
            PhasePoint x = section_sample(section, rng);
            Orbit orbit(table, x, section.orbit_options());
            auto next = [&]() {
                if (full) {
                    orbit.step();
                    x = orbit.point();
                } else {
                    x = induced_map(section, x).end;
                }
            };
            for (std::int64_t i = 0; i < opt.burn_in; ++i) next();
            size_t p = 0, filled = 0;
            while (b.count < target) {
                const double vi = v.at_collision(table, x);
                const double wi = w.at_collision(table, x);
                p = p == 0 ? L - 1 : p - 1;
                ring[p] = ring[p + L] = vi;
                filled = std::min(filled + 1, L);
                const double* hist = ring.data() + p;
                for (size_t k = 0; k < filled; ++k) b.lag_sum[k] += hist[k] * wi;
                for (size_t k = 0; k < filled; ++k) ++b.lag_count[k];
                b.sum_v += vi;
                b.sum_w += wi;
                ++b.count;
                next();
            }
        } catch (const TrajectoryError&) {
            ++discards;
        }
    }
    LagAccumulator acc(L);
    acc.add_batch(stream, b, discards);
    return acc;
}

LagAccumulator map_correlation_accumulate(const CrossSection& section, const Observable& v,
                                          const Observable& w, const MapCorrelationOptions& opt)
{
    if (opt.max_lag < 1) throw std::invalid_argument("max lag must be at least 1");
    auto parts = run_streams<LagAccumulator>(
        opt.run, [&](int s) { return map_correlation_stream(section, v, w, opt, s); });
    LagAccumulator acc(static_cast<size_t>(opt.max_lag) + 1);
    for (const auto& p : parts) acc.merge(p);
    return acc;
}

CorrelationSeries map_correlation(const CrossSection& section, const Observable& v, const Observable& w,
                                  const MapCorrelationOptions& opt)
{
    const LagAccumulator acc = map_correlation_accumulate(section, v, w, opt);
    std::vector<double> lags(acc.lags());
    for (size_t k = 0; k < lags.size(); ++k) lags[k] = static_cast<double>(k);
    CorrelationSeries s = to_series(acc, lags);
    s.v_name = v.name();
    s.w_name = w.name();
    s.route = "map:" + std::string(to_string(section.kind()));
    s.burn_in = opt.burn_in;
    s.seed = opt.run.seed;
    return s;
}

// ---------------------------------------------------------------------------

double default_flow_step(const BilliardTable& table) { return 0.01 * table.mean_free_path(); }

namespace {

/// Samples v and w every dt along one flow trajectory, handing them over in chunks.
/// Returns whether the trajectory ended on a singularity.
template <class Sink>
bool sample_trajectory(const BilliardTable& table, const Observable& v, const Observable& w, Orbit& orbit,
                       double dt, size_t count, size_t chunk, std::vector<double>& vs,
                       std::vector<double>& ws, Sink&& sink)
{
    const bool same = &v == &w;
    size_t produced = 0;
    bool failed = false;
    try {
        PhasePoint cur = orbit.point();
        MapStep st = orbit.step();
        Vec2 q0 = position(table, cur), vel = velocity(table, cur);
        double u = 0.0;
        while (produced < count) {
            while (u >= st.flight) {
                u -= st.flight;
                cur = st.next;
                st = orbit.step();
                q0 = position(table, cur);
                vel = velocity(table, cur);
            }
            const FlowPoint fp{cur, u};
            const double a = v.position_only() ? v.at_position(q0 + vel * u) : v.at(table, fp);
            vs.push_back(a);
            if (same) ws.push_back(a);
            else ws.push_back(w.position_only() ? w.at_position(q0 + vel * u) : w.at(table, fp));
            ++produced;
            u += dt;
            if (vs.size() == chunk) sink();
        }
    } catch (const TrajectoryError&) {
        failed = true;
    }
    if (!vs.empty()) sink();
    return failed;
}

}  // namespace

LagAccumulator flow_correlation_accumulate(const BilliardTable& table, const Observable& v,
                                           const Observable& w, const FlowCorrelationOptions& opt)
{
    const double dt = opt.dt > 0.0 ? opt.dt : default_flow_step(table);
    if (!(opt.t_max >= dt)) throw std::invalid_argument("flow correlation grid is finer than the time step");
    const size_t L = static_cast<size_t>(std::floor(opt.t_max / dt + 1e-9)) + 1;
    const auto total_samples = static_cast<std::int64_t>(std::llround(opt.total_time / dt));
    const size_t chunk = std::max<size_t>(4 * L, size_t{1} << 18);

    auto parts = run_streams<LagAccumulator>(opt.run, [&](int stream) {
        StreamRng rng(opt.run.seed, static_cast<std::uint64_t>(stream));
        const auto target = static_cast<size_t>(stream_share(total_samples, opt.run.streams, stream));
        LagAccumulator::Batch b;
        b.lag_sum.assign(L, 0.0);
        b.lag_count.assign(L, 0);
        std::int64_t discards = 0;
        std::vector<double> vs, ws, xv, yw;
        while (static_cast<size_t>(b.count) < target) {
            FlowPoint p0;
            std::optional<Orbit> orbit;
            try {
                p0 = flow_measure_sample(table, rng);
                orbit.emplace(table, p0.base);
                for (std::int64_t i = 0; i < opt.burn_in; ++i) orbit->step();
            } catch (const TrajectoryError&) {
                ++discards;
                continue;
            }
            // Pairs (i, i+k) are credited to the chunk holding i+k: the previous L-1 values
            // of v are carried over in front of each chunk, with w zeroed there.
            std::vector<double> hist;
            size_t length = 0;
            auto sink = [&] {
                xv.assign(hist.begin(), hist.end());
                xv.insert(xv.end(), vs.begin(), vs.end());
                yw.assign(hist.size(), 0.0);
                yw.insert(yw.end(), ws.begin(), ws.end());
                const auto c = lag_products(xv, yw, L);
                for (size_t k = 0; k < c.size(); ++k) b.lag_sum[k] += c[k];
                for (size_t i = 0; i < vs.size(); ++i) {
                    b.sum_v += vs[i];
                    b.sum_w += ws[i];
                }
                length += vs.size();
                const size_t keep = std::min(L - 1, xv.size());
                hist.assign(xv.end() - static_cast<long>(keep), xv.end());
                vs.clear();
                ws.clear();
            };
            vs.clear();
            ws.clear();
            const size_t want = target - static_cast<size_t>(b.count);
            if (sample_trajectory(table, v, w, *orbit, dt, want, chunk, vs, ws, sink)) ++discards;
            for (size_t k = 0; k < L && k < length; ++k) b.lag_count[k] += static_cast<std::int64_t>(length - k);
            b.count += static_cast<std::int64_t>(length);
        }
        LagAccumulator acc(L);
        acc.add_batch(stream, b, discards);
        return acc;
    });
    LagAccumulator acc(L);
    for (const auto& p : parts) acc.merge(p);
    return acc;
}

CorrelationSeries flow_correlation(const BilliardTable& table, const Observable& v, const Observable& w,
                                   const FlowCorrelationOptions& opt)
{
    const double dt = opt.dt > 0.0 ? opt.dt : default_flow_step(table);
    const LagAccumulator acc = flow_correlation_accumulate(table, v, w, opt);
    std::vector<double> lags(acc.lags());
    for (size_t k = 0; k < lags.size(); ++k) lags[k] = static_cast<double>(k) * dt;
    CorrelationSeries s = to_series(acc, lags);
    s.v_name = v.name();
    s.w_name = w.name();
    s.route = "flow";
    s.dt = dt;
    s.burn_in = opt.burn_in;
    s.seed = opt.run.seed;
    return s;
}

// ---------------------------------------------------------------------------

namespace {

/// Walks the suspension over (f-hat, h-hat): one induced return at a time, with the
/// intermediate collisions kept to place the particle inside the current return.
class SectionSuspension {
public:
    SectionSuspension(const CrossSection& section, PhasePoint x) : section_(section) { load(x); }

    double roof() const { return roof_; }

    /// Ambient position at suspension time tau >= the previous query.
    Vec2 position_at(double tau)
    {
        while (tau >= base_ + roof_) {
            base_ += roof_;
            load(end_);
        }
        double local = tau - base_;
        while (j_ + 1 < flights_.size() && local >= cum_[j_] + flights_[j_]) ++j_;
        return pos_[j_] + vel_[j_] * (local - cum_[j_]);
    }

private:
    void load(const PhasePoint& x)
    {
        const BilliardTable& t = section_.table();
        pos_.clear();
        vel_.clear();
        flights_.clear();
        cum_.clear();
        j_ = 0;
        Orbit orbit(t, x, section_.orbit_options());
        PhasePoint cur = x;
        double acc = 0.0;
        for (std::int64_t n = 0;; ++n) {
            const MapStep s = orbit.step();
            pos_.push_back(position(t, cur));
            vel_.push_back(velocity(t, cur));
            flights_.push_back(s.flight);
            cum_.push_back(acc);
            acc += s.flight;
            if (section_.contains(s.next, cur)) {
                end_ = s.next;
                break;
            }
            if (n >= kMaxReturnSteps) throw NoReturn("no return to the section");
            cur = s.next;
        }
        roof_ = acc;
    }

    const CrossSection& section_;
    std::vector<Vec2> pos_, vel_;
    std::vector<double> flights_, cum_;
    size_t j_ = 0;
    PhasePoint end_;
    double roof_ = 0.0;
    double base_ = 0.0;
};

}  // namespace

CorrelationSeries flow_correlation_section(const CrossSection& section, const Observable& v,
                                           const Observable& w, const FlowCorrelationOptions& opt,
                                           std::int64_t starts)
{
    if (!v.position_only() || !w.position_only())
        throw std::invalid_argument("section flow correlation needs position observables");
    const BilliardTable& table = section.table();
    const double dt = opt.dt > 0.0 ? opt.dt : default_flow_step(table);
    const size_t L = static_cast<size_t>(std::floor(opt.t_max / dt + 1e-9)) + 1;

    auto parts = run_streams<WeightedLagAccumulator>(opt.run, [&](int stream) {
        StreamRng rng(opt.run.seed, static_cast<std::uint64_t>(stream));
        WeightedLagAccumulator acc;
        WeightedLagAccumulator::Batch b;
        b.ww.assign(L, 0.0);
        b.wvw.assign(L, 0.0);
        const std::int64_t want = stream_share(starts, opt.run.streams, stream);
        std::vector<double> wk(L);
        std::int64_t done = 0;
        while (done < want) {
            try {
                const PhasePoint x = section_sample(section, rng);
                SectionSuspension susp(section, x);
                const double weight = susp.roof();
                const double u = rng.uniform() * weight;
                const double v0 = v.at_position(susp.position_at(u));
                for (size_t k = 0; k < L; ++k) wk[k] = w.at_position(susp.position_at(u + k * dt));
                b.weight += weight;
                b.wv += weight * v0;
                for (size_t k = 0; k < L; ++k) {
                    b.ww[k] += weight * wk[k];
                    b.wvw[k] += weight * v0 * wk[k];
                }
                ++done;
            } catch (const TrajectoryError&) {
                ++acc.discarded;
            }
        }
        acc.samples = done;
        acc.batches.emplace(stream, b);
        return acc;
    });
    WeightedLagAccumulator acc;
    for (const auto& p : parts) acc.merge(p);

    CorrelationSeries s;
    for (size_t k = 0; k < L; ++k) {
        s.lag.push_back(static_cast<double>(k) * dt);
        s.rho.push_back(acc.estimate(k));
        s.se.push_back(acc.standard_error(k));
    }
    s.v_name = v.name();
    s.w_name = w.name();
    s.route = "flow-section:" + std::string(to_string(section.kind()));
    s.samples = acc.samples;
    s.discarded = acc.discarded;
    s.dt = dt;
    s.streams = opt.run.streams;
    s.seed = opt.run.seed;
    return s;
}

}  // namespace billiards
