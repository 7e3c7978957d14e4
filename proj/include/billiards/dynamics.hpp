#pragma once

#include <cstdint>

#include "billiards/geometry.hpp"
#include "billiards/rng.hpp"

namespace billiards {

inline constexpr double kEpsGraze = 1e-9;
inline constexpr double kEpsFlow = 1e-8;
inline constexpr double kEpsCornerHit = 1e-12;
inline constexpr long kMaxCuspRun = 100000;

/// Collision coordinates: component, global arclength r and the outgoing angle phi to the
/// inward normal, positive when the velocity leans toward increasing r.
struct PhasePoint {
    int component = 0;
    double r = 0.0;
    double phi = 0.0;

    double psi() const { return 0.5 * kPi - std::abs(phi); }
};

/// Point of the suspension: base collision plus time u elapsed since it.
struct FlowPoint {
    PhasePoint base;
    double u = 0.0;
};

struct CollisionEvent {
    double t = 0.0;          // flight time (= distance, unit speed)
    int component = -1;
    double r = 0.0;          // global arclength of the hit
    double incidence = 0.0;  // angle between -velocity and the inward normal at the hit
    double phi = 0.0;        // outgoing angle after reflection
    Vec2 position;
    Vec2 reflected;
    bool grazing = false;
    bool corner = false;
};

/// First boundary hit of the ray q + t*omega, t > t_min. `from` is the component q lies on
/// (or -1 for an interior point); rays do not re-hit a convex or flat component they leave.
/// Throws NoIntersection when nothing is hit.
CollisionEvent next_collision(const BilliardTable& table, Vec2 q, Vec2 omega, int from = -1);

Vec2 position(const BilliardTable& table, const PhasePoint& x);
Vec2 velocity(const BilliardTable& table, const PhasePoint& x);

struct MapStep {
    PhasePoint next;
    double flight = 0.0;
    bool grazing = false;
};

/// One application of the billiard map together with the free flight. Throws CornerHit.
MapStep advance(const BilliardTable& table, const PhasePoint& x);

PhasePoint billiard_map(const BilliardTable& table, const PhasePoint& x);
/// h(x) = |f(x) - x|.
double free_flight(const BilliardTable& table, const PhasePoint& x);

/// The involution (r, phi) -> (r, -phi); f^-1 = iota f iota.
inline PhasePoint time_reverse(const PhasePoint& x) { return {x.component, x.r, -x.phi}; }
PhasePoint inverse_map(const BilliardTable& table, const PhasePoint& x);

/// Ambient position and unit velocity of a suspension point.
Vec2 flow_position(const BilliardTable& table, const FlowPoint& p);
Vec2 flow_velocity(const BilliardTable& table, const FlowPoint& p);

/// phi_t. A point with u = h(base) is reported as (f(base), 0).
FlowPoint flow(const BilliardTable& table, FlowPoint p, double t);

/// Normalized Liouville measure cos(phi) dr dphi / (2|dQ|).
PhasePoint liouville_sample(const BilliardTable& table, StreamRng& rng);
/// Flow-invariant measure: x weighted by h(x), u uniform on [0, h(x)].
FlowPoint flow_measure_sample(const BilliardTable& table, StreamRng& rng);

/// Phase point for global arclength r (component resolved by the table convention).
PhasePoint phase_point(const BilliardTable& table, double r, double phi);

/// Cyclic arclength distance from r to the nearest cusp corner (infinity without cusps).
double cusp_distance(const BilliardTable& table, double r);

struct OrbitOptions {
    /// A collision is "in a cusp" when within this fraction of the adjacent arc length of
    /// a cusp corner.
    double cusp_fraction = 0.05;
    long max_cusp_run = kMaxCuspRun;
};

/// Forward orbit with the cusp-run guard: more than `max_cusp_run` consecutive collisions
/// inside one cusp neighbourhood throws CuspOverflow.
class Orbit {
public:
    Orbit(const BilliardTable& table, PhasePoint start, OrbitOptions options = {});

    const PhasePoint& point() const { return x_; }
    std::int64_t steps() const { return steps_; }
    long cusp_run() const { return run_; }

    MapStep step();

private:
    bool in_cusp(const PhasePoint& x) const;

    const BilliardTable* table_;
    PhasePoint x_;
    OrbitOptions opt_;
    std::vector<double> cusp_r_;
    std::vector<double> cusp_radius_;
    std::int64_t steps_ = 0;
    long run_ = 0;
};

}  // namespace billiards
