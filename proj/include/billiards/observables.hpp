#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "billiards/dynamics.hpp"

namespace billiards {

/// Factor cos(kx*x + ky*y + phase) multiplying a bump.
struct TrigFactor {
    double kx = 0.0;
    double ky = 0.0;
    double phase = 0.0;
};

/// Real function on the suspension M^h.
///
/// Bumps exp(1/((|q-q0|/rho0)^2 - 1)) are supported at distance > rho0 from the boundary,
/// so every flow derivative vanishes near collisions. Phase observables depend on the
/// last collision only and are piecewise Holder.
class Observable {
public:
    enum class Smoothness { flow_smooth, piecewise_holder };

    /// Throws std::invalid_argument unless dist(q0, dQ) > 2*rho0.
    static Observable bump(const BilliardTable& table, Vec2 q0, double rho0,
                           std::optional<TrigFactor> trig = std::nullopt);
    static Observable phase(std::string name,
                            std::function<double(const BilliardTable&, const PhasePoint&)> f);
    static Observable constant(double c);

    /// Same observable minus a constant (a mean-zero variant when c is the mean).
    Observable shifted(double c) const;

    const std::string& name() const { return name_; }
    Smoothness smoothness() const { return smoothness_; }
    bool position_only() const { return !phase_fn_; }
    double offset() const { return offset_; }
    Vec2 center() const { return q0_; }
    double radius() const { return rho0_; }

    double at(const BilliardTable& table, const FlowPoint& p) const;
    double at_collision(const BilliardTable& table, const PhasePoint& x) const;
    /// Position-only observables.
    double at_position(Vec2 q) const;

    /// Integral of a position-only observable along the segment p + s*omega, 0 <= s <= len.
    double integrate_chord(Vec2 p, Vec2 omega, double len) const;

    /// Mean over the flow-invariant measure (uniform on Q) of a position-only observable.
    double space_mean(const BilliardTable& table) const;

private:
    std::string name_;
    Smoothness smoothness_ = Smoothness::piecewise_holder;
    double offset_ = 0.0;
    double constant_ = 0.0;
    bool has_bump_ = false;
    Vec2 q0_;
    double rho0_ = 0.0;
    std::optional<TrigFactor> trig_;
    std::function<double(const BilliardTable&, const PhasePoint&)> phase_fn_;
};

/// Indicator of flat-wall collisions times cos(phi)^power.
Observable flat_wall_observable(int power = 2);
/// cos(phi)^power on every component.
Observable cos_phi_observable(int power = 2);

}  // namespace billiards
