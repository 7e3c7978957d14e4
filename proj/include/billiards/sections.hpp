#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "billiards/dynamics.hpp"

namespace billiards {

inline constexpr std::int64_t kMaxReturnSteps = 10'000'000;

enum class SectionKind { full, flower, cusp, stadium };

std::string_view to_string(SectionKind k);
SectionKind section_kind_from_string(std::string_view s);

/// One trip from a section point to the next section hit.
struct ReturnRecord {
    PhasePoint start;
    PhasePoint end;
    std::int64_t n = 0;   // f-steps taken
    double h_hat = 0.0;   // summed free flights
    std::int64_t cell = -1;  // E_n index of `start`, -1 when start is not in a cell
    double g = 0.0;       // sliding time (flower/stadium) or interior cusp time
    bool discarded = false;
};

/// Subset of the collision space M with its induced return map.
///
/// full    : all of M.
/// flower  : dispersing collisions plus the first collision on each focusing arc.
/// cusp    : collisions farther than delta (arclength) from every cusp corner.
/// stadium : flat-wall collisions plus focusing collisions whose predecessor is flat.
class CrossSection {
public:
    static CrossSection full(std::shared_ptr<const BilliardTable> table);
    static CrossSection flower(std::shared_ptr<const BilliardTable> table);
    /// delta <= 0 selects the default, 5% of the shortest arc adjacent to a cusp.
    static CrossSection cusp(std::shared_ptr<const BilliardTable> table, double delta = 0.0);
    static CrossSection stadium(std::shared_ptr<const BilliardTable> table);
    static CrossSection make(SectionKind kind, std::shared_ptr<const BilliardTable> table,
                             double delta = 0.0);

    SectionKind kind() const { return kind_; }
    const BilliardTable& table() const { return *table_; }
    const std::shared_ptr<const BilliardTable>& table_ptr() const { return table_; }
    double delta() const { return delta_; }

    /// Membership; flower and stadium sections apply f^-1 once for focusing collisions.
    bool contains(const PhasePoint& x) const;
    /// Membership of x when its predecessor f^-1 x is already known.
    bool contains(const PhasePoint& x, const PhasePoint& previous) const;

    /// True for points of a first-collision set E (flower/stadium focusing members).
    bool in_first_collision_set(const PhasePoint& x, const PhasePoint& previous) const;

    /// Cell index of a section point: for E points the number n of further collisions on
    /// the same arc, for cusp sections the number of collisions spent in the cusp before
    /// returning. Empty for points outside every cell.
    std::optional<std::int64_t> cell_index(const PhasePoint& x) const;

    /// Base set B used for return-time tails: section points on component 0 that are
    /// first collisions there, away from cusps and not part of a flat-wall bouncing run.
    bool in_base(const PhasePoint& x, const PhasePoint& previous) const;

    OrbitOptions orbit_options() const;

private:
    CrossSection(SectionKind kind, std::shared_ptr<const BilliardTable> table, double delta);

    SectionKind kind_;
    std::shared_ptr<const BilliardTable> table_;
    double delta_ = 0.0;
};

/// f-hat: iterate f from x until the next section hit. Throws NoReturn after
/// `max_steps` collisions and propagates CornerHit / CuspOverflow.
ReturnRecord induced_map(const CrossSection& section, const PhasePoint& x,
                         std::int64_t max_steps = kMaxReturnSteps);

/// h-hat_p(x) = sum of h-hat over the first p induced returns.
double roof_sum(const CrossSection& section, const PhasePoint& x, int p);

/// Sample from Liouville measure restricted to the section (rejection).
PhasePoint section_sample(const CrossSection& section, StreamRng& rng);

/// E points on one focusing arc with psi uniform in [psi_lo, psi_hi], entering the arc
/// at a uniform position within the first 2*psi of arc (either sliding direction).
std::vector<PhasePoint> flower_entry_samples(const CrossSection& section, int arc, double psi_lo,
                                             double psi_hi, int count, StreamRng& rng);

/// Section points whose next induced return is a cusp excursion. Each sample is seeded at
/// a turning point at arclength `depth` from a cusp corner, with a small angle, and traced
/// backward to the collision that entered the cusp neighbourhood.
std::optional<PhasePoint> cusp_excursion_start(const CrossSection& section, int cusp_corner,
                                               double depth, double phi, bool on_incoming);

}  // namespace billiards
