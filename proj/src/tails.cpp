#include <algorithm>
#include <cmath>
#include <limits>

#include "billiards/errors.hpp"
#include "billiards/stats.hpp"

namespace billiards {

void TailHistogram::merge(const TailHistogram& o)
{
    for (const auto& [s, counts] : o.by_stream)
        if (!by_stream.emplace(s, counts).second)
            throw std::invalid_argument("stream present in both histograms");
    for (const auto& [n, c] : o.cells) cells[n] += c;
    discarded += o.discarded;
}

std::map<std::int64_t, std::int64_t> TailHistogram::counts(int skip_stream) const
{
    std::map<std::int64_t, std::int64_t> out;
    for (const auto& [s, counts] : by_stream) {
        if (s == skip_stream) continue;
        for (const auto& [n, c] : counts) out[n] += c;
    }
    return out;
}

std::int64_t TailHistogram::returns(int skip_stream) const
{
    std::int64_t total = 0;
    for (const auto& [s, counts] : by_stream) {
        if (s == skip_stream) continue;
        for (const auto& [n, c] : counts) total += c;
    }
    return total;
}

double TailHistogram::discard_rate() const
{
    const std::int64_t r = returns();
    return r + discarded == 0 ? 0.0 : static_cast<double>(discarded) / static_cast<double>(r + discarded);
}

DecaySeries TailHistogram::survival(std::int64_t min_count, int skip_stream) const
{
    const auto c = counts(skip_stream);
    const std::int64_t total = returns(skip_stream);
    DecaySeries s;
    if (total == 0) return s;
    std::int64_t above = total;  // returns with tau > n, starting at n = 0
    auto it = c.begin();
    const std::int64_t n_max = c.empty() ? 0 : c.rbegin()->first;
    for (std::int64_t n = 1; n <= n_max; ++n) {
        while (it != c.end() && it->first <= n) {
            above -= it->second;
            ++it;
        }
        if (above < min_count) break;
        s.x.push_back(static_cast<double>(n));
        s.y.push_back(static_cast<double>(above) / static_cast<double>(total));
        s.se.push_back(std::sqrt(static_cast<double>(above)) / static_cast<double>(total));
    }
    return s;
}

TailHistogram tail_distribution(const CrossSection& section, const TailOptions& opt)
{
    const BilliardTable& table = section.table();
    const bool slide_cells = section.kind() == SectionKind::flower || section.kind() == SectionKind::stadium;
    const bool cusp_cells = section.kind() == SectionKind::cusp;

    auto parts = run_streams<TailHistogram>(opt.run, [&](int stream) {
        StreamRng rng(opt.run.seed, static_cast<std::uint64_t>(stream));
        TailHistogram h;
        auto& counts = h.by_stream[stream];
        const std::int64_t want = stream_share(opt.returns, opt.run.streams, stream);
        std::int64_t got = 0;
        while (got < want) {
            try {
                PhasePoint cur = liouville_sample(table, rng);
                Orbit orbit(table, cur, section.orbit_options());
                bool anchored = false, seen_member = false, tracking = false;
                std::int64_t section_steps = 0, since_base = 0, since_member = 0, run = 0;
                int run_comp = -1;
                while (got < want) {
                    const PhasePoint nx = orbit.step().next;
                    ++since_base;
                    ++since_member;
                    if (tracking) {
                        if (nx.component == run_comp) {
                            ++run;
                        } else {
                            h.cells[run] += 1;
                            tracking = false;
                        }
                    }
                    if (section.contains(nx, cur)) {
                        ++section_steps;
                        if (cusp_cells && seen_member) h.cells[since_member - 1] += 1;
                        seen_member = anchored;
                        since_member = 0;
                        if (slide_cells && anchored && section.in_first_collision_set(nx, cur)) {
                            tracking = true;
                            run = 0;
                            run_comp = nx.component;
                        }
                        if (section.in_base(nx, cur)) {
                            if (anchored) {
                                counts[section_steps] += 1;
                                ++got;
                            }
                            anchored = true;
                            seen_member = true;
                            section_steps = 0;
                            since_base = 0;
                        }
                    }
                    if (since_base > opt.max_steps) throw NoReturn("no return to the base set");
                    cur = nx;
                }
            } catch (const TrajectoryError&) {
                ++h.discarded;
            }
        }
        return h;
    });
    TailHistogram out;
    out.section = std::string(to_string(section.kind()));
    out.seed = opt.run.seed;
    for (const auto& p : parts) out.merge(p);
    return out;
}

TailFit fit_tail(const TailHistogram& h, double n_low, std::int64_t min_count, int max_points)
{
    const DecaySeries s = h.survival(min_count);
    TailFit f;
    f.models = compare_models(s, n_low, std::numeric_limits<double>::infinity(), max_points);
    f.chosen = f.models.preferred == DecayModel::power ? f.models.power : f.models.exponential;

    std::vector<double> slopes;
    for (const auto& [stream, counts] : h.by_stream) {
        try {
            const DecaySeries d = h.survival(1, stream);
            slopes.push_back(decay_fit(d, f.chosen.model, f.chosen.x_low, f.chosen.x_high, max_points).slope);
        } catch (const InsufficientData&) {
        }
    }
    const size_t k = slopes.size();
    if (k >= 3) {
        double mean = 0.0;
        for (double x : slopes) mean += x;
        mean /= static_cast<double>(k);
        double ss = 0.0;
        for (double x : slopes) ss += (x - mean) * (x - mean);
        f.jackknife_se = std::sqrt(ss * static_cast<double>(k - 1) / static_cast<double>(k));
        const double q = student_t_quantile(0.95, static_cast<int>(k) - 1);
        f.chosen.slope_se = f.jackknife_se;
        f.chosen.ci_low = f.chosen.slope - q * f.jackknife_se;
        f.chosen.ci_high = f.chosen.slope + q * f.jackknife_se;
    }
    return f;
}

}  // namespace billiards
