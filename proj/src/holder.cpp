#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "billiards/errors.hpp"
#include "billiards/stats.hpp"

namespace billiards {

HolderEstimate holder_modulus(std::span<const CellSample> cell, double alpha, int min_samples)
{
    if (static_cast<int>(cell.size()) < min_samples)
        throw InsufficientData("too few samples in the cell for a Holder estimate");
    std::map<long, std::vector<const CellSample*>> pieces;
    for (const auto& c : cell) pieces[c.piece()].push_back(&c);

    HolderEstimate e;
    e.samples = static_cast<int>(cell.size());
    e.pieces = static_cast<int>(pieces.size());
    for (const auto& [key, pts] : pieces) {
        double lo = pts[0]->h_hat, hi = pts[0]->h_hat, diam = 0.0;
        for (size_t i = 0; i < pts.size(); ++i) {
            lo = std::min(lo, pts[i]->h_hat);
            hi = std::max(hi, pts[i]->h_hat);
            for (size_t j = i + 1; j < pts.size(); ++j) {
                const double d = std::hypot(pts[i]->x.r - pts[j]->x.r, pts[i]->x.phi - pts[j]->x.phi);
                diam = std::max(diam, d);
                if (d <= 0.0) continue;
                ++e.pairs;
                e.modulus = std::max(e.modulus, std::abs(pts[i]->h_hat - pts[j]->h_hat) / std::pow(d, alpha));
            }
        }
        if (static_cast<int>(pts.size()) > e.largest_piece) {
            e.largest_piece = static_cast<int>(pts.size());
            e.oscillation = hi - lo;
            e.diameter = diam;
        }
    }
    return e;
}

std::map<std::int64_t, std::vector<CellSample>> flower_cells(const CrossSection& section, int arc,
                                                            std::span<const std::int64_t> cells,
                                                            int per_cell, StreamRng& rng)
{
    if (section.kind() != SectionKind::flower && section.kind() != SectionKind::stadium)
        throw std::invalid_argument("flower cells need a flower or stadium section");
    const double span = section.table().component(arc).span();
    std::map<std::int64_t, std::vector<CellSample>> out;
    for (std::int64_t n : cells) {
        if (n < 1) throw std::invalid_argument("cell index must be positive");
        auto& bucket = out[n];
        // Sliding n times along an arc of angular span S needs psi near S/(2n).
        const double psi_lo = span / (2.0 * static_cast<double>(n + 2));
        const double psi_hi = std::min(span / (2.0 * static_cast<double>(n)), 0.5 * kPi);
        for (int round = 0; round < 50 && static_cast<int>(bucket.size()) < per_cell; ++round) {
            for (const PhasePoint& x : flower_entry_samples(section, arc, psi_lo, psi_hi, 4 * per_cell, rng)) {
                if (static_cast<int>(bucket.size()) >= per_cell) break;
                try {
                    const ReturnRecord rec = induced_map(section, x);
                    if (rec.cell == n) bucket.push_back({x, rec.h_hat, rec.g, rec.n, rec.end.component});
                } catch (const TrajectoryError&) {
                }
            }
        }
    }
    return out;
}

namespace {

struct CuspProbe {
    std::optional<PhasePoint> start;
    std::int64_t cell = -1;
    ReturnRecord rec;
};

CuspProbe probe(const CrossSection& section, int corner, double depth, double phi, bool incoming)
{
    CuspProbe p;
    try {
        p.start = cusp_excursion_start(section, corner, depth, phi, incoming);
        if (p.start) {
            p.rec = induced_map(section, *p.start);
            p.cell = p.rec.n - 1;
        }
    } catch (const TrajectoryError&) {
        p.start.reset();
    }
    return p;
}

}  // namespace

std::map<std::int64_t, std::vector<CellSample>> cusp_cells(const CrossSection& section, int corner,
                                                          std::span<const std::int64_t> cells,
                                                          int per_cell, StreamRng& rng, int start_component)
{
    if (section.kind() != SectionKind::cusp) throw std::invalid_argument("cusp cells need a cusp section");

    // Excursion length scales like 1/depth; calibrate the constant once.
    double scale = 1.0;
    {
        const double d0 = 0.2 * section.delta();
        const CuspProbe p = probe(section, corner, d0, 0.0, true);
        if (p.start && p.cell > 0) scale = d0 * static_cast<double>(p.cell);
    }

    std::map<std::int64_t, std::vector<CellSample>> out;
    for (std::int64_t n : cells) {
        if (n < 1) throw std::invalid_argument("cell index must be positive");
        auto& bucket = out[n];
        const double guess = scale / static_cast<double>(n);
        for (int attempt = 0; attempt < 20 * per_cell && static_cast<int>(bucket.size()) < per_cell; ++attempt) {
            const double phi = rng.uniform(-0.2, 0.2);
            const bool side = rng.uniform() < 0.5;
            auto eval = [&](double d) { return probe(section, corner, d, phi, side); };

            // Deeper turning points give longer excursions: bracket [deep, shallow].
            double deep = guess, shallow = guess;
            CuspProbe p = eval(guess);
            if (!p.start) continue;
            CuspProbe hit;
            if (p.cell == n) hit = p;
            const bool too_deep = p.cell > n;
            for (int tries = 0; tries < 40 && !hit.start && p.start && (p.cell > n) == too_deep; ++tries) {
                if (too_deep) {
                    deep = shallow;
                    shallow *= 1.5;
                    p = eval(shallow);
                } else {
                    shallow = deep;
                    deep /= 1.5;
                    p = eval(deep);
                }
                if (p.start && p.cell == n) hit = p;
            }
            if (!hit.start && p.start && (p.cell > n) == too_deep) continue;
            // Randomized bisection in log-depth lands anywhere inside the n-interval.
            for (int it = 0; it < 60 && !hit.start && p.start; ++it) {
                const double d = deep * std::pow(shallow / deep, rng.uniform(0.25, 0.75));
                p = eval(d);
                if (!p.start) break;
                if (p.cell == n) hit = p;
                else if (p.cell > n) deep = d;
                else shallow = d;
            }
            if (!hit.start || (start_component >= 0 && hit.start->component != start_component)) continue;
            bucket.push_back({*hit.start, hit.rec.h_hat, hit.rec.g, hit.rec.n, hit.rec.end.component});
        }
    }
    return out;
}

}  // namespace billiards
