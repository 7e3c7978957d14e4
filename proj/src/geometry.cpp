#include "billiards/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "billiards/errors.hpp"

namespace billiards {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

double wrap_pi(double a)
{
    a = std::remainder(a, kTwoPi);
    return a <= -kPi ? a + kTwoPi : a;
}

bool within(double s, double lo, double hi, double tol) { return s >= lo - tol && s <= hi + tol; }

// Points of the circle (c, R) hit by the line p + t d, t in [t0, t1] (d unit).
void line_circle(Vec2 p, Vec2 d, double t0, double t1, Vec2 c, double R, double tol,
                 std::vector<std::pair<double, Vec2>>& out)
{
    const Vec2 w = p - c;
    const double b = dot(w, d);
    const double cc = dot(w, w) - R * R;
    double disc = b * b - cc;
    if (disc < -tol * R) return;
    disc = std::max(disc, 0.0);
    const double sq = std::sqrt(disc);
    for (double t : {-b - sq, -b + sq}) {
        if (within(t, t0, t1, tol)) out.emplace_back(t, p + d * t);
        if (sq == 0.0) break;
    }
}

}  // namespace

std::string_view to_string(Curvature c)
{
    switch (c) {
    case Curvature::dispersing: return "dispersing";
    case Curvature::focusing: return "focusing";
    case Curvature::neutral: return "neutral";
    }
    return "?";
}

std::string_view to_string(Family f)
{
    switch (f) {
    case Family::cusped: return "cusped";
    case Family::flower: return "flower";
    case Family::stadium: return "stadium";
    case Family::custom: return "custom";
    }
    return "?";
}

Family family_from_string(std::string_view s)
{
    if (s == "cusped") return Family::cusped;
    if (s == "flower") return Family::flower;
    if (s == "stadium") return Family::stadium;
    if (s == "custom") return Family::custom;
    throw TableError("unknown table family '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// BoundaryComponent

BoundaryComponent BoundaryComponent::arc(Vec2 center, double radius, double start_angle,
                                         double end_angle, Curvature orientation)
{
    BoundaryComponent c;
    c.kind = ComponentKind::arc;
    c.curvature = orientation;
    c.center = center;
    c.radius = radius;
    c.start_angle = start_angle;
    c.end_angle = end_angle;
    c.length = radius * std::abs(end_angle - start_angle);
    return c;
}

BoundaryComponent BoundaryComponent::segment(Vec2 a, Vec2 b)
{
    BoundaryComponent c;
    c.kind = ComponentKind::segment;
    c.curvature = Curvature::neutral;
    c.a = a;
    c.b = b;
    c.length = distance(a, b);
    return c;
}

double BoundaryComponent::span() const { return std::abs(end_angle - start_angle); }

Vec2 BoundaryComponent::start_point() const
{
    return is_arc() ? center + radius * unit_vector(start_angle) : a;
}

Vec2 BoundaryComponent::end_point() const
{
    return is_arc() ? center + radius * unit_vector(end_angle) : b;
}

Vec2 BoundaryComponent::point(double s) const
{
    if (is_arc()) return center + radius * unit_vector(angle_at(s));
    return a + (b - a) * (s / length);
}

BoundaryFrame BoundaryComponent::frame(double s) const
{
    BoundaryFrame f;
    if (is_arc()) {
        const double theta = angle_at(s);
        const Vec2 radial = unit_vector(theta);
        f.position = center + radius * radial;
        f.tangent = direction() * perp(radial);
        f.normal = perp(f.tangent);
        f.curvature = curvature == Curvature::dispersing ? 1.0 / radius : -1.0 / radius;
    } else {
        f.tangent = (b - a) / length;
        f.position = a + f.tangent * s;
        f.normal = perp(f.tangent);
        f.curvature = 0.0;
    }
    return f;
}

double BoundaryComponent::arc_parameter(double theta) const
{
    const double mid = 0.5 * (start_angle + end_angle);
    return 0.5 * length + direction() * radius * wrap_pi(theta - mid);
}

double BoundaryComponent::distance_to(Vec2 q) const
{
    if (is_arc()) {
        const Vec2 w = q - center;
        const double s = arc_parameter(std::atan2(w.y, w.x));
        if (s >= 0.0 && s <= length) return std::abs(norm(w) - radius);
        return std::min(distance(q, start_point()), distance(q, end_point()));
    }
    const Vec2 d = b - a;
    const double t = std::clamp(dot(q - a, d) / dot(d, d), 0.0, 1.0);
    return distance(q, a + d * t);
}

std::vector<Vec2> component_intersections(const BoundaryComponent& p, const BoundaryComponent& q,
                                          double tol)
{
    std::vector<Vec2> out;
    auto on_arc = [tol](const BoundaryComponent& arc, Vec2 x) {
        const Vec2 w = x - arc.center;
        return within(arc.arc_parameter(std::atan2(w.y, w.x)), 0.0, arc.length, tol);
    };

    if (!p.is_arc() && !q.is_arc()) {
        const Vec2 d1 = p.b - p.a, d2 = q.b - q.a;
        const double den = cross(d1, d2);
        const double l1 = p.length, l2 = q.length;
        if (std::abs(den) <= tol * l1 * l2) {
            // Parallel: report overlap endpoints if collinear.
            if (std::abs(cross(d1, q.a - p.a)) > tol * l1) return out;
            for (Vec2 x : {q.a, q.b}) {
                const double t = dot(x - p.a, d1) / (l1 * l1);
                if (within(t, 0.0, 1.0, tol / l1)) out.push_back(x);
            }
            for (Vec2 x : {p.a, p.b}) {
                const double t = dot(x - q.a, d2) / (l2 * l2);
                if (within(t, 0.0, 1.0, tol / l2)) out.push_back(x);
            }
            return out;
        }
        const double t = cross(q.a - p.a, d2) / den;
        const double u = cross(q.a - p.a, d1) / den;
        if (within(t, 0.0, 1.0, tol / l1) && within(u, 0.0, 1.0, tol / l2)) out.push_back(p.a + d1 * t);
        return out;
    }

    if (p.is_arc() != q.is_arc()) {
        const BoundaryComponent& seg = p.is_arc() ? q : p;
        const BoundaryComponent& arc = p.is_arc() ? p : q;
        std::vector<std::pair<double, Vec2>> hits;
        line_circle(seg.a, (seg.b - seg.a) / seg.length, 0.0, seg.length, arc.center, arc.radius, tol,
                    hits);
        for (const auto& [t, x] : hits)
            if (on_arc(arc, x)) out.push_back(x);
        return out;
    }

    const Vec2 dc = q.center - p.center;
    const double d = norm(dc);
    const double r1 = p.radius, r2 = q.radius;
    if (d <= tol) {
        if (std::abs(r1 - r2) > tol) return out;
        // Same circle: overlapping arcs share endpoints.
        for (Vec2 x : {q.start_point(), q.end_point()})
            if (on_arc(p, x)) out.push_back(x);
        for (Vec2 x : {p.start_point(), p.end_point()})
            if (on_arc(q, x)) out.push_back(x);
        return out;
    }
    if (d > r1 + r2 + tol || d < std::abs(r1 - r2) - tol) return out;
    const double along = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    const double h = std::sqrt(std::max(r1 * r1 - along * along, 0.0));
    const Vec2 e = dc / d;
    const Vec2 base = p.center + e * along;
    for (double sgn : {1.0, -1.0}) {
        const Vec2 x = base + perp(e) * (sgn * h);
        if (on_arc(p, x) && on_arc(q, x)) out.push_back(x);
        if (h == 0.0) break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// BilliardTable

int BilliardTable::component_at(double r) const
{
    if (!(r >= 0.0 && r < length_)) {
        std::ostringstream msg;
        msg << "arclength " << r << " outside [0, " << length_ << ")";
        throw std::out_of_range(msg.str());
    }
    for (int i = 0; i < component_count(); ++i) {
        const auto& c = components_[static_cast<size_t>(i)];
        if (r <= c.offset + c.length) return i;
    }
    return component_count() - 1;
}

BoundaryFrame BilliardTable::frame(double r) const { return frame(component_at(r), r); }

BoundaryFrame BilliardTable::frame(int i, double r) const
{
    const auto& c = component(i);
    return c.frame(std::clamp(r - c.offset, 0.0, c.length));
}

BoundaryFrame boundary_point(const BilliardTable& table, double r) { return table.frame(r); }

bool BilliardTable::contains(Vec2 q) const
{
    double winding = 0.0;
    for (const auto& c : components_) {
        if (!c.is_arc()) {
            const Vec2 u = c.a - q, v = c.b - q;
            winding += std::atan2(cross(u, v), dot(u, v));
            continue;
        }
        // Split the arc into pieces of at most a quarter turn; each piece sweeps the chord
        // angle, plus a full turn when q sits between the chord and the arc.
        const int pieces = std::max(1, static_cast<int>(std::ceil(c.span() / (0.5 * kPi))));
        const double ds = c.length / pieces;
        const bool inside_circle = distance(q, c.center) < c.radius;
        for (int k = 0; k < pieces; ++k) {
            const Vec2 A = c.point(k * ds), B = c.point((k + 1) * ds);
            const Vec2 u = A - q, v = B - q;
            winding += std::atan2(cross(u, v), dot(u, v));
            if (inside_circle) {
                const Vec2 M = c.point((k + 0.5) * ds);
                const double side_q = cross(B - A, q - A);
                const double side_m = cross(B - A, M - A);
                if (side_q * side_m > 0.0) winding += c.direction() * 2.0 * kPi;
            }
        }
    }
    return std::abs(winding) > kPi;
}

double BilliardTable::distance_to_boundary(Vec2 q) const
{
    double d = std::numeric_limits<double>::infinity();
    for (const auto& c : components_) d = std::min(d, c.distance_to(q));
    return d;
}

double BilliardTable::arclength_distance(double r1, double r2) const
{
    const double d = std::abs(r1 - r2);
    return std::min(d, length_ - d);
}

std::vector<int> BilliardTable::cusp_corner_indices() const
{
    std::vector<int> out;
    for (size_t i = 0; i < corners_.size(); ++i)
        if (corners_[i].type == CornerType::cusp) out.push_back(static_cast<int>(i));
    return out;
}

namespace {

double interior_angle(const BoundaryComponent& in, const BoundaryComponent& out)
{
    const Vec2 t_in = in.frame(in.length).tangent;
    const Vec2 t_out = out.frame(0.0).tangent;
    const double turn = std::atan2(cross(t_in, t_out), dot(t_in, t_out));
    if (kPi - std::abs(turn) > 1e-6) return kPi - turn;

    // Tangents antiparallel: a zero-angle cusp or a 2*pi spike. Decide from short chords.
    const Vec2 P = out.start_point();
    const double eta = 1e-4 * std::min(in.length, out.length);
    const Vec2 d_out = out.point(eta) - P;
    const Vec2 d_back = in.point(in.length - eta) - P;
    double sweep = std::atan2(cross(d_out, d_back), dot(d_out, d_back));
    if (sweep < 0.0) sweep += 2.0 * kPi;
    return sweep < kPi ? kPi - std::abs(turn) : kPi + std::abs(turn);
}

double signed_area(const std::vector<BoundaryComponent>& comps)
{
    double twice = 0.0;
    for (const auto& c : comps) {
        if (c.is_arc()) {
            const double t0 = c.start_angle, t1 = c.end_angle, R = c.radius;
            twice += c.center.x * R * (std::sin(t1) - std::sin(t0)) -
                     c.center.y * R * (std::cos(t1) - std::cos(t0)) + R * R * (t1 - t0);
        } else {
            twice += cross(c.a, c.b);
        }
    }
    return 0.5 * twice;
}

}  // namespace

BilliardTable build_table(const TableSpec& spec)
{
    const auto& in = spec.components;
    if (in.size() < 2) throw TableError("a table needs at least two boundary components");

    BilliardTable t;
    t.family_ = spec.family;
    t.components_.reserve(in.size());
    double offset = 0.0;
    for (size_t i = 0; i < in.size(); ++i) {
        BoundaryComponent c = in[i];
        std::ostringstream where;
        where << "component " << i << ": ";
        if (c.is_arc()) {
            if (!(c.radius > 0.0) || !std::isfinite(c.radius))
                throw TableError(where.str() + "arc radius must be positive");
            if (c.curvature == Curvature::neutral)
                throw TableError(where.str() + "arc must be dispersing or focusing");
            const double signed_span = c.end_angle - c.start_angle;
            if (signed_span == 0.0) throw TableError(where.str() + "empty arc span");
            if (std::abs(signed_span) >= 2.0 * kPi) throw TableError(where.str() + "arc span >= 2*pi");
            if ((signed_span > 0.0) != (c.curvature == Curvature::focusing))
                throw TableError(where.str() +
                                 "angle order inconsistent with orientation (focusing arcs run "
                                 "counterclockwise, dispersing arcs clockwise)");
            c.length = c.radius * std::abs(signed_span);
        } else {
            c.curvature = Curvature::neutral;
            c.length = distance(c.a, c.b);
            if (!(c.length > 0.0)) throw TableError(where.str() + "zero-length segment");
        }
        c.offset = offset;
        offset += c.length;
        t.components_.push_back(c);
    }
    t.length_ = offset;

    // Farthest pair over a dense boundary sample; the distance is stationary at the true
    // farthest pair, so the sampling error is second order in the spacing.
    std::vector<Vec2> pts;
    for (const auto& c : t.components_) {
        const int n = c.is_arc() ? 256 : 1;
        for (int k = 0; k <= n; ++k) pts.push_back(c.point(c.length * k / n));
    }
    double d2 = 0.0;
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j) {
            const Vec2 e = pts[i] - pts[j];
            d2 = std::max(d2, dot(e, e));
        }
    t.diameter_ = std::sqrt(d2);

    const size_t n = t.components_.size();
    for (size_t i = 0; i < n; ++i) {
        const auto& c = t.components_[i];
        const auto& next = t.components_[(i + 1) % n];
        const double gap = distance(c.end_point(), next.start_point());
        if (gap > kEpsGeom * t.diameter_) {
            std::ostringstream msg;
            msg << "open boundary: gap of " << gap << " between components " << i << " and "
                << (i + 1) % n;
            throw TableError(msg.str());
        }
    }

    const double tol = 1e-9 * t.diameter_;
    const double corner_tol = 1e-6 * t.diameter_;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            std::vector<Vec2> shared;
            if (j == i + 1) shared.push_back(t.components_[j].start_point());
            if (i == 0 && j == n - 1) shared.push_back(t.components_[i].start_point());
            for (Vec2 x : component_intersections(t.components_[i], t.components_[j], tol)) {
                const bool at_corner = std::any_of(shared.begin(), shared.end(), [&](Vec2 s) {
                    return distance(s, x) <= corner_tol;
                });
                if (!at_corner) {
                    std::ostringstream msg;
                    msg << "self-intersecting boundary: components " << i << " and " << j
                        << " meet at (" << x.x << ", " << x.y << ")";
                    throw TableError(msg.str());
                }
            }
        }
    }

    t.area_ = signed_area(t.components_);
    if (!(t.area_ > 0.0)) throw TableError("boundary must run counterclockwise around Q");

    // Centroid from a fine polygonal approximation of the boundary.
    {
        double a2 = 0.0, cx = 0.0, cy = 0.0;
        Vec2 prev = t.components_.front().start_point();
        for (const auto& c : t.components_) {
            const int m = c.is_arc() ? 2048 : 1;
            for (int k = 1; k <= m; ++k) {
                const Vec2 p = c.point(c.length * k / m);
                const double w = cross(prev, p);
                a2 += w;
                cx += (prev.x + p.x) * w;
                cy += (prev.y + p.y) * w;
                prev = p;
            }
        }
        t.centroid_ = {cx / (3.0 * a2), cy / (3.0 * a2)};
    }

    for (size_t i = 0; i < n; ++i) {
        const size_t j = (i + 1) % n;
        Corner k;
        k.incoming = static_cast<int>(i);
        k.outgoing = static_cast<int>(j);
        k.position = t.components_[j].start_point();
        k.r = t.components_[j].offset;
        k.interior_angle = interior_angle(t.components_[i], t.components_[j]);
        if (k.interior_angle < kEpsCorner) {
            k.type = CornerType::cusp;
            if (t.components_[i].curvature != Curvature::dispersing ||
                t.components_[j].curvature != Curvature::dispersing)
                throw TableError("cusp corners are only allowed between dispersing arcs");
        }
        t.corners_.push_back(k);
    }
    // Corner list is ordered by r: the corner closing the loop sits at r = 0.
    std::rotate(t.corners_.begin(), t.corners_.end() - 1, t.corners_.end());
    return t;
}

BilliardTable make_stadium(double L, double R)
{
    if (!(L > 0.0) || !(R > 0.0)) throw TableError("stadium needs L > 0 and R > 0");
    TableSpec spec;
    spec.family = Family::stadium;
    spec.components = {
        BoundaryComponent::segment({-0.5 * L, -R}, {0.5 * L, -R}),
        BoundaryComponent::arc({0.5 * L, 0.0}, R, -0.5 * kPi, 0.5 * kPi, Curvature::focusing),
        BoundaryComponent::segment({0.5 * L, R}, {-0.5 * L, R}),
        BoundaryComponent::arc({-0.5 * L, 0.0}, R, 0.5 * kPi, 1.5 * kPi, Curvature::focusing),
    };
    return build_table(spec);
}

BilliardTable make_three_cusp(double R)
{
    if (!(R > 0.0)) throw TableError("three-cusp table needs R > 0");
    TableSpec spec;
    spec.family = Family::cusped;
    const double circumradius = 2.0 * R / std::sqrt(3.0);
    for (int k = 0; k < 3; ++k) {
        const double gamma = 0.5 * kPi + 2.0 * kPi * k / 3.0;
        const double inward = gamma + kPi;
        spec.components.push_back(BoundaryComponent::arc(circumradius * unit_vector(gamma), R,
                                                         inward + kPi / 6.0, inward - kPi / 6.0,
                                                         Curvature::dispersing));
    }
    return build_table(spec);
}

BilliardTable make_flower(const PetalSpec& p)
{
    if (p.petals < 2) throw TableError("flower needs at least two petals");
    if (!(p.petal_radius > 0.0) || !(p.dispersing_radius > 0.0))
        throw TableError("flower radii must be positive");
    const double half = 0.5 * p.petal_span;
    const double sector = kPi / p.petals;
    if (!(half > sector) || !(p.petal_span < 2.0 * kPi))
        throw TableError("petal span must exceed 2*pi/petals (dispersing arcs would be empty)");
    const double link = p.petal_radius + p.dispersing_radius;
    const double D = link * (std::sin(half) / std::tan(sector) - std::cos(half));
    if (!(D > 0.0)) throw TableError("petal parameters put the petal centers past the origin");

    TableSpec spec;
    spec.family = Family::flower;
    for (int k = 0; k < p.petals; ++k) {
        const double alpha = 2.0 * sector * k;
        const Vec2 petal_center = D * unit_vector(alpha);
        spec.components.push_back(BoundaryComponent::arc(petal_center, p.petal_radius, alpha - half,
                                                         alpha + half, Curvature::focusing));
        const Vec2 disp_center = petal_center + link * unit_vector(alpha + half);
        spec.components.push_back(BoundaryComponent::arc(disp_center, p.dispersing_radius,
                                                         alpha + half + kPi,
                                                         alpha + 2.0 * sector - half + kPi,
                                                         Curvature::dispersing));
    }
    return build_flower(spec);
}

BilliardTable build_flower(const TableSpec& spec)
{
    TableSpec tagged = spec;
    tagged.family = Family::flower;
    BilliardTable table = build_table(tagged);
    const FlowerReport report = validate_flower_conditions(table);
    if (!report.ok()) {
        std::string msg = "flower conditions violated:";
        for (const auto& f : report.failures) msg += " " + f + ";";
        throw TableError(msg);
    }
    return table;
}

FlowerReport validate_flower_conditions(const BilliardTable& table, int samples)
{
    FlowerReport rep;
    const double tol = 1e-9 * table.diameter();
    const double corner_tol = 1e-6 * table.diameter();
    for (int i = 0; i < table.component_count(); ++i) {
        const auto& c = table.component(i);
        std::ostringstream where;
        where << "component " << i;
        if (c.curvature == Curvature::neutral) {
            if (rep.no_neutral) rep.failures.push_back("(i) neutral component present (" + where.str() + ")");
            rep.no_neutral = false;
            continue;
        }
        if (c.curvature != Curvature::focusing) continue;
        if (!(c.span() < kPi - 1e-12)) {
            rep.focusing_below_semicircle = false;
            rep.failures.push_back("(ii) focusing arc not strictly smaller than a semicircle (" +
                                   where.str() + ")");
        }

        // (iii): the rest of the supporting circle must lie in Q.
        const BoundaryComponent rest = BoundaryComponent::arc(
            c.center, c.radius, c.end_angle, c.start_angle + 2.0 * kPi, Curvature::focusing);
        bool contained = true;
        for (int j = 0; j < table.component_count() && contained; ++j) {
            if (j == i) continue;
            for (Vec2 x : component_intersections(rest, table.component(j), tol)) {
                if (distance(x, c.start_point()) > corner_tol && distance(x, c.end_point()) > corner_tol) {
                    contained = false;
                    break;
                }
            }
        }
        for (int k = 0; k < samples && contained; ++k) {
            const Vec2 q = rest.point(rest.length * (k + 0.5) / samples);
            if (!table.contains(q)) contained = false;
        }
        if (!contained) {
            rep.circles_contained = false;
            rep.failures.push_back("(iii) completed circle leaves Q (" + where.str() + ")");
        }
    }
    for (const auto& k : table.corners()) {
        if (k.type == CornerType::cusp) {
            rep.no_cusps = false;
            rep.failures.push_back("(iv) cusp between neighbouring components");
            break;
        }
    }
    return rep;
}

}  // namespace billiards
