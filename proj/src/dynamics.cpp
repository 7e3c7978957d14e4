#include "billiards/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "billiards/errors.hpp"

namespace billiards {

namespace {

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    int component = -1;
    double s = 0.0;
};

// Both roots of |q + t w - c|^2 = R^2 without cancellation.
int circle_roots(Vec2 q, Vec2 w, Vec2 c, double R, double roots[2])
{
    const Vec2 d = q - c;
    const double b = dot(d, w);
    const double cc = (d.x - R) * (d.x + R) + d.y * d.y;
    const double disc = b * b - cc;
    if (disc < 0.0) return 0;
    const double sq = std::sqrt(disc);
    const double t1 = b >= 0.0 ? -b - sq : -b + sq;
    if (t1 == 0.0) {
        roots[0] = 0.0;
        roots[1] = -2.0 * b;
        return 2;
    }
    roots[0] = t1;
    roots[1] = cc / t1;
    return 2;
}

}  // namespace

CollisionEvent next_collision(const BilliardTable& table, Vec2 q, Vec2 omega, int from)
{
    const double diam = table.diameter();
    const double t_min = kEpsGeom * diam;
    const double s_slack = 1e-9 * diam;
    Hit best;

    auto consider = [&](int j, double t, double s) {
        const auto& c = table.component(j);
        if (!(t > t_min) || t >= best.t) return;
        if (s < -s_slack || s > c.length + s_slack) return;
        best = {t, j, std::clamp(s, 0.0, c.length)};
    };

    for (int j = 0; j < table.component_count(); ++j) {
        const auto& c = table.component(j);
        if (!c.is_arc()) {
            if (j == from) continue;
            const Vec2 d = (c.b - c.a) / c.length;
            const double den = cross(omega, d);
            if (den == 0.0) continue;
            const Vec2 w = c.a - q;
            consider(j, cross(w, d) / den, cross(w, omega) / den);
            continue;
        }
        if (j == from) {
            if (c.curvature == Curvature::dispersing) continue;
            // Leaving a focusing arc: the far root of its own circle, free of the t = 0 root.
            const double t = -2.0 * dot(q - c.center, omega);
            const Vec2 p = q + omega * t - c.center;
            consider(j, t, c.arc_parameter(std::atan2(p.y, p.x)));
            continue;
        }
        double roots[2];
        const int n = circle_roots(q, omega, c.center, c.radius, roots);
        for (int k = 0; k < n; ++k) {
            const Vec2 p = q + omega * roots[k] - c.center;
            consider(j, roots[k], c.arc_parameter(std::atan2(p.y, p.x)));
        }
    }

    if (best.component < 0) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "ray from (" << q.x << ", " << q.y << ") along (" << omega.x << ", " << omega.y
            << ") leaves the table";
        throw NoIntersection(msg.str());
    }

    const auto& c = table.component(best.component);
    const BoundaryFrame fr = c.frame(best.s);
    CollisionEvent ev;
    ev.t = best.t;
    ev.component = best.component;
    ev.r = c.offset + best.s;
    ev.position = fr.position;
    const double vn = dot(omega, fr.normal);
    const double vt = dot(omega, fr.tangent);
    ev.incidence = std::atan2(vt, -vn);
    ev.phi = ev.incidence;
    ev.reflected = omega - fr.normal * (2.0 * vn);
    ev.grazing = 0.5 * kPi - std::abs(ev.phi) < kEpsGraze;
    const double edge = kEpsCornerHit * diam;
    ev.corner = best.s <= edge || best.s >= c.length - edge;
    return ev;
}

Vec2 position(const BilliardTable& table, const PhasePoint& x)
{
    return table.frame(x.component, x.r).position;
}

Vec2 velocity(const BilliardTable& table, const PhasePoint& x)
{
    const BoundaryFrame f = table.frame(x.component, x.r);
    return f.normal * std::cos(x.phi) + f.tangent * std::sin(x.phi);
}

MapStep advance(const BilliardTable& table, const PhasePoint& x)
{
    const BoundaryFrame f = table.frame(x.component, x.r);
    const Vec2 v = f.normal * std::cos(x.phi) + f.tangent * std::sin(x.phi);
    const CollisionEvent ev = next_collision(table, f.position, v, x.component);
    if (ev.corner) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "corner hit at r = " << ev.r << " from (" << x.component << ", " << x.r << ", "
            << x.phi << ")";
        throw CornerHit(msg.str());
    }
    return {{ev.component, ev.r, ev.phi}, ev.t, ev.grazing};
}

PhasePoint billiard_map(const BilliardTable& table, const PhasePoint& x) { return advance(table, x).next; }

double free_flight(const BilliardTable& table, const PhasePoint& x) { return advance(table, x).flight; }

PhasePoint inverse_map(const BilliardTable& table, const PhasePoint& x)
{
    return time_reverse(billiard_map(table, time_reverse(x)));
}

Vec2 flow_position(const BilliardTable& table, const FlowPoint& p)
{
    return position(table, p.base) + velocity(table, p.base) * p.u;
}

Vec2 flow_velocity(const BilliardTable& table, const FlowPoint& p) { return velocity(table, p.base); }

FlowPoint flow(const BilliardTable& table, FlowPoint p, double t)
{
    if (t < 0.0) throw std::invalid_argument("flow: negative time");
    Orbit orbit(table, p.base);
    double u = p.u + t;
    for (;;) {
        const PhasePoint x = orbit.point();
        const MapStep s = orbit.step();
        if (u < s.flight) return {x, u};
        u -= s.flight;
    }
}

PhasePoint phase_point(const BilliardTable& table, double r, double phi)
{
    return {table.component_at(r), r, phi};
}

PhasePoint liouville_sample(const BilliardTable& table, StreamRng& rng)
{
    const double r = rng.uniform() * table.length();
    const double phi = std::asin(2.0 * rng.uniform() - 1.0);
    return phase_point(table, r, phi);
}

FlowPoint flow_measure_sample(const BilliardTable& table, StreamRng& rng)
{
    const double h_max = 1.001 * table.diameter();  // covers the sampling error of diameter()
    for (;;) {
        const PhasePoint x = liouville_sample(table, rng);
        double h;
        try {
            h = free_flight(table, x);
        } catch (const TrajectoryError&) {
            continue;
        }
        if (rng.uniform() * h_max < h) return {x, rng.uniform() * h};
    }
}

double cusp_distance(const BilliardTable& table, double r)
{
    double d = std::numeric_limits<double>::infinity();
    for (const auto& k : table.corners())
        if (k.type == CornerType::cusp) d = std::min(d, table.arclength_distance(r, k.r));
    return d;
}

Orbit::Orbit(const BilliardTable& table, PhasePoint start, OrbitOptions options)
    : table_(&table), x_(start), opt_(options)
{
    for (const auto& k : table.corners()) {
        if (k.type != CornerType::cusp) continue;
        cusp_r_.push_back(k.r);
        cusp_radius_.push_back(opt_.cusp_fraction *
                               std::min(table.component(k.incoming).length,
                                        table.component(k.outgoing).length));
    }
    if (in_cusp(x_)) run_ = 1;
}

bool Orbit::in_cusp(const PhasePoint& x) const
{
    for (size_t i = 0; i < cusp_r_.size(); ++i)
        if (table_->arclength_distance(x.r, cusp_r_[i]) < cusp_radius_[i]) return true;
    return false;
}

MapStep Orbit::step()
{
    MapStep s = advance(*table_, x_);
    x_ = s.next;
    ++steps_;
    if (in_cusp(x_)) {
        if (++run_ > opt_.max_cusp_run) {
            std::ostringstream msg;
            msg << "more than " << opt_.max_cusp_run << " consecutive collisions in a cusp";
            throw CuspOverflow(msg.str());
        }
    } else {
        run_ = 0;
    }
    return s;
}

}  // namespace billiards
