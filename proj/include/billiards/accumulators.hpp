#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace billiards {

/// Sum of doubles quantized to multiples of 2^-32 and held in a 128-bit integer, so that
/// merging is exact and independent of order. Values must stay below 2^90 in magnitude.
class FixedSum {
public:
    static constexpr double kScale = 4294967296.0;

    FixedSum() = default;
    explicit FixedSum(double v) { add(v); }

    void add(double v) { sum_ += static_cast<__int128>(std::nearbyint(v * kScale)); }
    void merge(const FixedSum& o) { sum_ += o.sum_; }
    double value() const { return static_cast<double>(sum_) / kScale; }
    bool operator==(const FixedSum&) const = default;

private:
    __int128 sum_ = 0;
};

/// Lagged cross-moment sums for one or more independent streams.
///
/// Each stream contributes its own sums (computed in floating point along its orbit); the
/// pooled sums are FixedSums, and per-stream estimates are kept for batch-means errors.
struct LagAccumulator {
    struct Batch {
        std::int64_t count = 0;
        double sum_v = 0.0;
        double sum_w = 0.0;
        std::vector<double> lag_sum;
        std::vector<std::int64_t> lag_count;
    };

    std::vector<FixedSum> lag_sum;
    std::vector<std::int64_t> lag_count;
    FixedSum sum_v, sum_w;
    std::int64_t count = 0;
    std::int64_t discarded = 0;
    std::map<int, Batch> batches;  // keyed by stream id

    explicit LagAccumulator(size_t lags = 0) : lag_sum(lags), lag_count(lags, 0) {}

    void add_batch(int stream, const Batch& b, std::int64_t discards = 0);
    void merge(const LagAccumulator& o);

    size_t lags() const { return lag_sum.size(); }
    double mean_v() const { return sum_v.value() / static_cast<double>(count); }
    double mean_w() const { return sum_w.value() / static_cast<double>(count); }
    double estimate(size_t k) const;
    /// Standard error of the lag-k estimate from the spread of per-stream estimates.
    double standard_error(size_t k) const;
    bool operator==(const LagAccumulator& o) const;
};

/// Weighted lag moments for i.i.d. starts: sum of weight, weight*v(0), weight*w(t_k) and
/// weight*v(0)*w(t_k). Used by the section-suspension estimator.
struct WeightedLagAccumulator {
    struct Batch {
        double weight = 0.0;
        double wv = 0.0;
        std::vector<double> ww, wvw;
    };

    std::map<int, Batch> batches;
    std::int64_t samples = 0;
    std::int64_t discarded = 0;

    void merge(const WeightedLagAccumulator& o);
    size_t lags() const { return batches.empty() ? 0 : batches.begin()->second.ww.size(); }
    double estimate(size_t k) const;
    double standard_error(size_t k) const;
};

}  // namespace billiards
