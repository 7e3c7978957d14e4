#include "billiards/accumulators.hpp"

#include <stdexcept>

namespace billiards {

namespace {

double spread_error(const std::vector<double>& xs)
{
    const size_t k = xs.size();
    if (k < 2) return std::nan("");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(k);
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(k - 1) / static_cast<double>(k));
}

}  // namespace

void LagAccumulator::add_batch(int stream, const Batch& b, std::int64_t discards)
{
    if (b.lag_sum.size() != lags() || b.lag_count.size() != lags())
        throw std::invalid_argument("batch lag count mismatch");
    if (batches.count(stream)) throw std::invalid_argument("stream added twice");
    for (size_t k = 0; k < lags(); ++k) {
        lag_sum[k].add(b.lag_sum[k]);
        lag_count[k] += b.lag_count[k];
    }
    sum_v.add(b.sum_v);
    sum_w.add(b.sum_w);
    count += b.count;
    discarded += discards;
    batches.emplace(stream, b);
}

void LagAccumulator::merge(const LagAccumulator& o)
{
    if (o.lags() != lags()) throw std::invalid_argument("accumulator lag count mismatch");
    for (const auto& [s, b] : o.batches)
        if (batches.count(s)) throw std::invalid_argument("stream present in both accumulators");
    for (size_t k = 0; k < lags(); ++k) {
        lag_sum[k].merge(o.lag_sum[k]);
        lag_count[k] += o.lag_count[k];
    }
    sum_v.merge(o.sum_v);
    sum_w.merge(o.sum_w);
    count += o.count;
    discarded += o.discarded;
    batches.insert(o.batches.begin(), o.batches.end());
}

double LagAccumulator::estimate(size_t k) const
{
    if (lag_count[k] == 0 || count == 0) return std::nan("");
    return lag_sum[k].value() / static_cast<double>(lag_count[k]) - mean_v() * mean_w();
}

double LagAccumulator::standard_error(size_t k) const
{
    std::vector<double> per;
    for (const auto& [s, b] : batches) {
        if (b.lag_count[k] == 0 || b.count == 0) continue;
        const double n = static_cast<double>(b.count);
        per.push_back(b.lag_sum[k] / static_cast<double>(b.lag_count[k]) - (b.sum_v / n) * (b.sum_w / n));
    }
    return spread_error(per);
}

bool LagAccumulator::operator==(const LagAccumulator& o) const
{
    return lag_sum == o.lag_sum && lag_count == o.lag_count && sum_v == o.sum_v &&
           sum_w == o.sum_w && count == o.count && discarded == o.discarded;
}

void WeightedLagAccumulator::merge(const WeightedLagAccumulator& o)
{
    for (const auto& [s, b] : o.batches)
        if (!batches.emplace(s, b).second) throw std::invalid_argument("stream present in both accumulators");
    samples += o.samples;
    discarded += o.discarded;
}

double WeightedLagAccumulator::estimate(size_t k) const
{
    double W = 0.0, wv = 0.0, ww = 0.0, wvw = 0.0;
    for (const auto& [s, b] : batches) {
        W += b.weight;
        wv += b.wv;
        ww += b.ww[k];
        wvw += b.wvw[k];
    }
    return wvw / W - (wv / W) * (ww / W);
}

double WeightedLagAccumulator::standard_error(size_t k) const
{
    std::vector<double> per;
    for (const auto& [s, b] : batches)
        if (b.weight > 0.0) per.push_back(b.wvw[k] / b.weight - (b.wv / b.weight) * (b.ww[k] / b.weight));
    return spread_error(per);
}

}  // namespace billiards
