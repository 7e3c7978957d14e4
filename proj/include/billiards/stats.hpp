#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "billiards/accumulators.hpp"
#include "billiards/fit.hpp"
#include "billiards/observables.hpp"
#include "billiards/parallel.hpp"
#include "billiards/sections.hpp"

namespace billiards {

struct CorrelationSeries {
    std::string v_name;
    std::string w_name;
    std::string route;  // "map:<section>", "flow" or "flow-section:<section>"
    std::vector<double> lag;
    std::vector<double> rho;
    std::vector<double> se;
    std::int64_t samples = 0;
    std::int64_t burn_in = 0;
    std::int64_t discarded = 0;
    double dt = 0.0;
    int streams = 0;
    std::uint64_t seed = 0;

    DecaySeries decay() const { return {lag, rho, se}; }
};

CorrelationSeries to_series(const LagAccumulator& acc, std::span<const double> lags);

// ---------------------------------------------------------------------------
// Map correlations rho(n) along long orbits of f (or of the induced map of a section).

struct MapCorrelationOptions {
    int max_lag = 100;
    std::int64_t collisions = 1'000'000;  // section returns in total over all streams
    std::int64_t burn_in = 1000;
    RunOptions run;
};

/// Per-stream accumulation; exposed for merge tests.
LagAccumulator map_correlation_stream(const CrossSection& section, const Observable& v,
                                      const Observable& w, const MapCorrelationOptions& opt, int stream);
LagAccumulator map_correlation_accumulate(const CrossSection& section, const Observable& v,
                                          const Observable& w, const MapCorrelationOptions& opt);
CorrelationSeries map_correlation(const CrossSection& section, const Observable& v, const Observable& w,
                                  const MapCorrelationOptions& opt);

// ---------------------------------------------------------------------------
// Flow correlations rho_{v,w}(t).

struct FlowCorrelationOptions {
    double t_max = 50.0;
    double dt = 0.0;             // <= 0: 0.01 x mean free path
    double total_time = 1.0e5;   // flow time over all streams
    std::int64_t burn_in = 1000;  // collisions
    RunOptions run;
};

double default_flow_step(const BilliardTable& table);

/// Time averages along long flow trajectories sampled every dt; lag products by FFT.
CorrelationSeries flow_correlation(const BilliardTable& table, const Observable& v, const Observable& w,
                                   const FlowCorrelationOptions& opt);
LagAccumulator flow_correlation_accumulate(const BilliardTable& table, const Observable& v,
                                           const Observable& w, const FlowCorrelationOptions& opt);

/// The same correlation computed over the suspension of (f-hat, h-hat): independent starts
/// (x, u) with x ~ mu restricted to the section, weighted by h-hat(x), u uniform on
/// [0, h-hat(x)], advanced return by return. `starts` is the total number of starts.
CorrelationSeries flow_correlation_section(const CrossSection& section, const Observable& v,
                                           const Observable& w, const FlowCorrelationOptions& opt,
                                           std::int64_t starts);

/// Lag products sum_i v[i] w[i+k] for k < lags, by zero-padded FFT.
std::vector<double> lag_products(std::span<const double> v, std::span<const double> w, size_t lags);
/// Direct O(n * lags) reference.
std::vector<double> lag_products_direct(std::span<const double> v, std::span<const double> w, size_t lags);

// ---------------------------------------------------------------------------
// Return-time tails.

struct TailHistogram {
    std::map<int, std::map<std::int64_t, std::int64_t>> by_stream;  // return time -> count
    std::map<std::int64_t, std::int64_t> cells;                     // cell index -> count
    std::int64_t discarded = 0;
    std::string section;
    std::uint64_t seed = 0;

    void merge(const TailHistogram& o);
    std::map<std::int64_t, std::int64_t> counts(int skip_stream = -1) const;
    std::int64_t returns(int skip_stream = -1) const;
    double discard_rate() const;
    bool excessive_discards() const { return discard_rate() > 1e-3; }
    /// P(tau > n) at every n where at least `min_count` returns exceed n.
    DecaySeries survival(std::int64_t min_count = 1, int skip_stream = -1) const;
};

struct TailOptions {
    std::int64_t returns = 1'000'000;
    std::int64_t max_steps = kMaxReturnSteps;
    RunOptions run;
};

/// Return times to the section's base set, counted in applications of the section map.
TailHistogram tail_distribution(const CrossSection& section, const TailOptions& opt);

struct TailFit {
    ModelComparison models;
    FitReport chosen;       // preferred model, with jackknife interval
    double jackknife_se = 0.0;
};

/// Fits both models to the survival function over n >= n_low where at least `min_count`
/// returns remain; slope intervals come from a delete-one-stream jackknife.
TailFit fit_tail(const TailHistogram& h, double n_low, std::int64_t min_count = 100,
                 int max_points = 40);

// ---------------------------------------------------------------------------
// Holder moduli of induced roofs on cells.

struct CellSample {
    PhasePoint x;
    double h_hat = 0.0;
    double g = 0.0;
    std::int64_t n = 0;  // f-steps of the return
    int end_component = -1;

    /// Samples with equal keys lie in one continuity piece of h-hat (same start component,
    /// sliding direction and landing component).
    long piece() const { return (static_cast<long>(x.component) * 2 + (x.phi > 0.0)) * 4096 + end_component; }
};

/// Pairs are only compared within one continuity piece; the oscillation and diameter are
/// taken over the largest piece.
struct HolderEstimate {
    double modulus = 0.0;      // sup |dh|/d^alpha over pairs in a common piece
    double oscillation = 0.0;  // max h - min h on the largest piece
    double diameter = 0.0;     // max pairwise (r, phi) distance on the largest piece
    std::int64_t pairs = 0;
    int samples = 0;
    int pieces = 0;
    int largest_piece = 0;
};

HolderEstimate holder_modulus(std::span<const CellSample> cell, double alpha, int min_samples = 10);

/// Entry samples of the flower cells E_n on one arc, `per_cell` verified samples each.
std::map<std::int64_t, std::vector<CellSample>> flower_cells(const CrossSection& section, int arc,
                                                            std::span<const std::int64_t> cells,
                                                            int per_cell, StreamRng& rng);

/// Samples of the cusp cells E_n of one cusp corner, seeded at turning points inside the
/// cusp on either side and traced back to the section. Deep excursions mostly start on the
/// component facing the cusp; `start_component` >= 0 keeps only starts on that component.
std::map<std::int64_t, std::vector<CellSample>> cusp_cells(const CrossSection& section, int corner,
                                                          std::span<const std::int64_t> cells,
                                                          int per_cell, StreamRng& rng,
                                                          int start_component = -1);

// ---------------------------------------------------------------------------
// Growth of Var(int_0^T v(phi_t) dt).

struct VarianceGrowth {
    std::vector<double> horizon;
    std::vector<double> variance;
    std::vector<double> se;
    std::int64_t ensemble = 0;
    std::int64_t discarded = 0;
    double linear_a = 0.0, linear_b = 0.0, linear_chi2 = 0.0;
    double tlogt_c = 0.0, tlogt_b = 0.0, tlogt_chi2 = 0.0;
    std::string preferred;  // "linear" or "tlogt"
    bool discriminating = false;
};

struct VarianceOptions {
    std::vector<double> horizons;
    std::int64_t ensemble = 1000;
    RunOptions run;
};

/// v must be position-only; it is integrated exactly along each flight chord.
VarianceGrowth variance_growth(const BilliardTable& table, const Observable& v, const VarianceOptions& opt);

/// Weighted comparison of Var = a*T + b against c*T*log(T) + b.
void fit_variance_models(VarianceGrowth& g);

}  // namespace billiards
