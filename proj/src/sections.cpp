#include "billiards/sections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "billiards/errors.hpp"

namespace billiards {

std::string_view to_string(SectionKind k)
{
    switch (k) {
    case SectionKind::full: return "full";
    case SectionKind::flower: return "flower";
    case SectionKind::cusp: return "cusp";
    case SectionKind::stadium: return "stadium";
    }
    return "?";
}

SectionKind section_kind_from_string(std::string_view s)
{
    if (s == "full") return SectionKind::full;
    if (s == "flower") return SectionKind::flower;
    if (s == "cusp") return SectionKind::cusp;
    if (s == "stadium") return SectionKind::stadium;
    throw std::invalid_argument("unknown section '" + std::string(s) + "'");
}

namespace {

double shortest_cusp_arc(const BilliardTable& t)
{
    double m = std::numeric_limits<double>::infinity();
    for (const auto& k : t.corners())
        if (k.type == CornerType::cusp)
            m = std::min({m, t.component(k.incoming).length, t.component(k.outgoing).length});
    return m;
}

double default_delta(const BilliardTable& t)
{
    const double m = shortest_cusp_arc(t);
    return std::isfinite(m) ? 0.05 * m : 0.0;
}

}  // namespace

CrossSection::CrossSection(SectionKind kind, std::shared_ptr<const BilliardTable> table, double delta)
    : kind_(kind), table_(std::move(table)), delta_(delta)
{
    if (!table_) throw std::invalid_argument("cross-section needs a table");
}

CrossSection CrossSection::full(std::shared_ptr<const BilliardTable> table)
{
    const double d = default_delta(*table);
    return CrossSection(SectionKind::full, std::move(table), d);
}

CrossSection CrossSection::flower(std::shared_ptr<const BilliardTable> table)
{
    const FlowerReport rep = validate_flower_conditions(*table, 2000);
    if (!rep.ok()) throw TableError("flower section requires a table satisfying the flower conditions");
    return CrossSection(SectionKind::flower, std::move(table), 0.0);
}

CrossSection CrossSection::cusp(std::shared_ptr<const BilliardTable> table, double delta)
{
    if (table->cusp_corner_indices().empty()) throw TableError("cusp section requires a table with cusps");
    double shortest = std::numeric_limits<double>::infinity();
    for (const auto& c : table->components()) shortest = std::min(shortest, c.length);
    if (delta <= 0.0) delta = default_delta(*table);
    if (!(delta < 0.5 * shortest)) {
        std::ostringstream msg;
        msg << "cusp exclusion radius " << delta << " must be below half the shortest component ("
            << 0.5 * shortest << ")";
        throw std::invalid_argument(msg.str());
    }
    return CrossSection(SectionKind::cusp, std::move(table), delta);
}

CrossSection CrossSection::stadium(std::shared_ptr<const BilliardTable> table)
{
    bool flat = false, focusing = false, dispersing = false;
    for (const auto& c : table->components()) {
        flat |= c.curvature == Curvature::neutral;
        focusing |= c.curvature == Curvature::focusing;
        dispersing |= c.curvature == Curvature::dispersing;
    }
    if (!flat || !focusing || dispersing)
        throw TableError("stadium section requires flat and focusing components only");
    return CrossSection(SectionKind::stadium, std::move(table), default_delta(*table));
}

CrossSection CrossSection::make(SectionKind kind, std::shared_ptr<const BilliardTable> table, double delta)
{
    switch (kind) {
    case SectionKind::full: return full(std::move(table));
    case SectionKind::flower: return flower(std::move(table));
    case SectionKind::cusp: return cusp(std::move(table), delta);
    case SectionKind::stadium: return stadium(std::move(table));
    }
    throw std::invalid_argument("unknown section kind");
}

OrbitOptions CrossSection::orbit_options() const
{
    OrbitOptions o;
    const double m = shortest_cusp_arc(*table_);
    if (kind_ == SectionKind::cusp && std::isfinite(m)) o.cusp_fraction = delta_ / m;
    return o;
}

bool CrossSection::contains(const PhasePoint& x, const PhasePoint& previous) const
{
    const Curvature c = table_->curvature_of(x.component);
    switch (kind_) {
    case SectionKind::full: return true;
    case SectionKind::flower:
        return c == Curvature::dispersing || previous.component != x.component;
    case SectionKind::stadium:
        return c == Curvature::neutral || table_->curvature_of(previous.component) == Curvature::neutral;
    case SectionKind::cusp: return cusp_distance(*table_, x.r) > delta_;
    }
    return false;
}

bool CrossSection::contains(const PhasePoint& x) const
{
    const Curvature c = table_->curvature_of(x.component);
    if ((kind_ == SectionKind::flower || kind_ == SectionKind::stadium) && c == Curvature::focusing)
        return contains(x, inverse_map(*table_, x));
    return contains(x, x);
}

bool CrossSection::in_first_collision_set(const PhasePoint& x, const PhasePoint& previous) const
{
    if (kind_ != SectionKind::flower && kind_ != SectionKind::stadium) return false;
    return table_->curvature_of(x.component) == Curvature::focusing && contains(x, previous);
}

std::optional<std::int64_t> CrossSection::cell_index(const PhasePoint& x) const
{
    switch (kind_) {
    case SectionKind::full: return std::nullopt;
    case SectionKind::cusp: {
        if (!contains(x)) return std::nullopt;
        return induced_map(*this, x).n - 1;
    }
    case SectionKind::flower:
    case SectionKind::stadium: {
        if (!in_first_collision_set(x, inverse_map(*table_, x))) return std::nullopt;
        std::int64_t n = 0;
        PhasePoint y = x;
        for (;;) {
            y = billiard_map(*table_, y);
            if (y.component != x.component) return n;
            if (++n >= kMaxReturnSteps) throw NoReturn("sliding run exceeds the return cap");
        }
    }
    }
    return std::nullopt;
}

bool CrossSection::in_base(const PhasePoint& x, const PhasePoint& previous) const
{
    if (x.component != 0 || !contains(x, previous)) return false;
    const double guard = kind_ == SectionKind::cusp ? delta_ : default_delta(*table_);
    if (guard > 0.0 && cusp_distance(*table_, x.r) <= guard) return false;
    const Curvature c = table_->curvature_of(0);
    if (c == Curvature::focusing && previous.component == x.component) return false;
    if (c == Curvature::neutral && table_->curvature_of(previous.component) == Curvature::neutral)
        return false;
    return true;
}

ReturnRecord induced_map(const CrossSection& section, const PhasePoint& x, std::int64_t max_steps)
{
    const BilliardTable& table = section.table();
    ReturnRecord rec;
    rec.start = x;

    const bool slide_cells = (section.kind() == SectionKind::flower ||
                              section.kind() == SectionKind::stadium) &&
                             table.curvature_of(x.component) == Curvature::focusing;
    bool sliding = slide_cells;
    if (slide_cells) rec.cell = 0;

    Orbit orbit(table, x, section.orbit_options());
    PhasePoint current = x;
    for (;;) {
        const MapStep s = orbit.step();
        ++rec.n;
        rec.h_hat += s.flight;
        const bool member = section.contains(s.next, current);
        if (sliding) {
            if (s.next.component == x.component) {
                ++rec.cell;
                rec.g += s.flight;
            } else {
                sliding = false;
            }
        }
        if (section.kind() == SectionKind::cusp && rec.n >= 2 && !member) rec.g += s.flight;
        if (member) {
            rec.end = s.next;
            break;
        }
        if (rec.n >= max_steps) {
            std::ostringstream msg;
            msg << "no return to the section within " << max_steps << " collisions";
            throw NoReturn(msg.str());
        }
        current = s.next;
    }
    if (section.kind() == SectionKind::cusp) rec.cell = rec.n - 1;
    return rec;
}

double roof_sum(const CrossSection& section, const PhasePoint& x, int p)
{
    if (p < 1) throw std::invalid_argument("roof_sum needs p >= 1");
    double total = 0.0;
    PhasePoint y = x;
    for (int k = 0; k < p; ++k) {
        const ReturnRecord rec = induced_map(section, y);
        total += rec.h_hat;
        y = rec.end;
    }
    return total;
}

PhasePoint section_sample(const CrossSection& section, StreamRng& rng)
{
    for (;;) {
        const PhasePoint x = liouville_sample(section.table(), rng);
        try {
            if (section.contains(x)) return x;
        } catch (const TrajectoryError&) {
        }
    }
}

std::vector<PhasePoint> flower_entry_samples(const CrossSection& section, int arc, double psi_lo,
                                             double psi_hi, int count, StreamRng& rng)
{
    const BilliardTable& table = section.table();
    const auto& c = table.component(arc);
    if (c.curvature != Curvature::focusing) throw std::invalid_argument("entry samples need a focusing arc");
    std::vector<PhasePoint> out;
    out.reserve(static_cast<size_t>(count));
    const double edge = 1e-9 * c.length;
    long attempts = 0;
    while (static_cast<int>(out.size()) < count && attempts < 100L * count + 1000) {
        ++attempts;
        const double psi = rng.uniform(psi_lo, psi_hi);
        const double theta0 = 2.0 * psi * rng.uniform();
        const bool forward = rng.uniform() < 0.5;
        const double s = forward ? c.radius * theta0 : c.length - c.radius * theta0;
        if (s < edge || s > c.length - edge) continue;
        const PhasePoint x{arc, c.offset + s, forward ? 0.5 * kPi - psi : -(0.5 * kPi - psi)};
        try {
            if (section.contains(x)) out.push_back(x);
        } catch (const TrajectoryError&) {
        }
    }
    return out;
}

std::optional<PhasePoint> cusp_excursion_start(const CrossSection& section, int cusp_corner,
                                               double depth, double phi, bool on_incoming)
{
    const BilliardTable& table = section.table();
    const Corner& k = table.corners().at(static_cast<size_t>(cusp_corner));
    if (k.type != CornerType::cusp) throw std::invalid_argument("corner is not a cusp");
    const int comp = on_incoming ? k.incoming : k.outgoing;
    const auto& c = table.component(comp);
    if (!(depth > 0.0 && depth < c.length)) return std::nullopt;
    const double s = on_incoming ? c.length - depth : depth;
    const PhasePoint turning{comp, c.offset + s, phi};
    try {
        // Backward orbit of the turning point is iota of the forward orbit of iota(turning).
        Orbit back(table, time_reverse(turning), section.orbit_options());
        PhasePoint prev = back.point();
        for (std::int64_t i = 0; i < kMaxReturnSteps; ++i) {
            const MapStep st = back.step();
            if (section.contains(st.next, prev)) return time_reverse(st.next);
            prev = st.next;
        }
    } catch (const TrajectoryError&) {
    }
    return std::nullopt;
}

}  // namespace billiards
