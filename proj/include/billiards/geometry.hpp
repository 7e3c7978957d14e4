#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "billiards/vec2.hpp"

namespace billiards {

inline constexpr double kPi = 3.14159265358979323846;

/// Relative closure / validation tolerance, in units of the table diameter.
inline constexpr double kEpsGeom = 1e-12;
/// Interior angles below this (radians) are cusps.
inline constexpr double kEpsCorner = 1e-9;

enum class ComponentKind { arc, segment };

/// Sign of the curvature seen from inside the table. Dispersing pieces bulge into Q
/// (phase-space part M+), focusing pieces bulge out of Q (M-), segments are neutral (M0).
enum class Curvature { dispersing, focusing, neutral };

enum class Family { cusped, flower, stadium, custom };

std::string_view to_string(Curvature c);
std::string_view to_string(Family f);
Family family_from_string(std::string_view s);

/// Position, unit tangent (direction of increasing r), inward unit normal and signed
/// curvature (positive = dispersing) of the boundary at one arclength value.
struct BoundaryFrame {
    Vec2 position;
    Vec2 tangent;
    Vec2 normal;
    double curvature = 0.0;
};

/// One maximal smooth piece of the boundary: a circular arc or a line segment.
///
/// Boundaries are traversed counterclockwise (Q on the left). An arc is traversed from
/// `start_angle` to `end_angle`; a focusing arc therefore has end > start (counterclockwise
/// about its center) and a dispersing arc has end < start.
struct BoundaryComponent {
    ComponentKind kind = ComponentKind::segment;
    Curvature curvature = Curvature::neutral;

    Vec2 center;
    double radius = 0.0;
    double start_angle = 0.0;
    double end_angle = 0.0;

    Vec2 a;
    Vec2 b;

    double offset = 0.0;  // r at the start of this component
    double length = 0.0;

    static BoundaryComponent arc(Vec2 center, double radius, double start_angle,
                                 double end_angle, Curvature orientation);
    static BoundaryComponent segment(Vec2 a, Vec2 b);

    bool is_arc() const { return kind == ComponentKind::arc; }
    /// +1 for counterclockwise (focusing) arcs, -1 for clockwise (dispersing) arcs.
    double direction() const { return curvature == Curvature::focusing ? 1.0 : -1.0; }
    double span() const;
    double angle_at(double s) const { return start_angle + direction() * s / radius; }

    Vec2 start_point() const;
    Vec2 end_point() const;
    /// Frame at local arclength s in [0, length].
    BoundaryFrame frame(double s) const;
    Vec2 point(double s) const;

    /// Local arclength of the point on the supporting circle at polar angle `theta`,
    /// measured so that the arc itself covers [0, length]; points outside the arc map
    /// outside that interval (symmetrically about the arc midpoint).
    double arc_parameter(double theta) const;

    double distance_to(Vec2 q) const;
};

enum class CornerType { transversal, cusp };

struct Corner {
    Vec2 position;
    double interior_angle = 0.0;  // radians, in [0, 2*pi)
    CornerType type = CornerType::transversal;
    int incoming = 0;  // component ending here
    int outgoing = 0;  // component starting here
    double r = 0.0;    // arclength of the corner
};

struct TableSpec {
    std::vector<BoundaryComponent> components;
    Family family = Family::custom;
};

/// A validated billiard table. Immutable after construction and safe to share across threads.
class BilliardTable {
public:
    const std::vector<BoundaryComponent>& components() const { return components_; }
    const BoundaryComponent& component(int i) const { return components_[static_cast<size_t>(i)]; }
    int component_count() const { return static_cast<int>(components_.size()); }
    const std::vector<Corner>& corners() const { return corners_; }
    Family family() const { return family_; }

    double length() const { return length_; }
    double diameter() const { return diameter_; }
    double area() const { return area_; }
    /// Area centroid of Q.
    Vec2 centroid() const { return centroid_; }
    /// Mean free path pi*|Q|/|dQ| (Santalo's formula).
    double mean_free_path() const { return kPi * area_ / length_; }

    Curvature curvature_of(int i) const { return component(i).curvature; }

    /// Component owning global arclength r. Ranges are (offset, offset + length] except
    /// component 0, which owns [0, length]; corner values go to the lower index.
    int component_at(double r) const;
    BoundaryFrame frame(double r) const;
    BoundaryFrame frame(int component, double r) const;

    /// Winding-number point-in-Q test, exact for arcs and segments.
    bool contains(Vec2 q) const;
    double distance_to_boundary(Vec2 q) const;

    /// Cyclic arclength distance between two boundary parameters.
    double arclength_distance(double r1, double r2) const;

    std::vector<int> cusp_corner_indices() const;

    TableSpec spec() const { return {components_, family_}; }

private:
    friend BilliardTable build_table(const TableSpec& spec);

    std::vector<BoundaryComponent> components_;
    std::vector<Corner> corners_;
    Family family_ = Family::custom;
    double length_ = 0.0;
    double diameter_ = 0.0;
    double area_ = 0.0;
    Vec2 centroid_;
};

/// Validate a declarative component list and assemble the table.
/// Throws TableError for open or self-intersecting boundaries, degenerate components,
/// clockwise orientation, or cusps between non-dispersing components.
BilliardTable build_table(const TableSpec& spec);

BoundaryFrame boundary_point(const BilliardTable& table, double r);

/// Two segments of length L at distance 2R joined by two semicircles of radius R.
BilliardTable make_stadium(double L, double R);

/// Three congruent dispersing arcs of radius R, pairwise tangent, enclosing a
/// curvilinear triangle with three zero-angle corners.
BilliardTable make_three_cusp(double R);

/// Symmetric flower: `petals` focusing arcs of radius `petal_radius` and angular span
/// `petal_span`, alternating with dispersing arcs of radius `dispersing_radius` that join
/// each petal tangentially (so every completed petal circle can stay inside Q).
struct PetalSpec {
    int petals = 4;
    double petal_radius = 1.0;
    double petal_span = 2.0 * kPi / 3.0;
    double dispersing_radius = 4.0;
};

BilliardTable make_flower(const PetalSpec& spec = {});
/// Any arc/segment list accepted as a flower only if it passes all four conditions.
BilliardTable build_flower(const TableSpec& spec);

struct FlowerReport {
    bool no_neutral = true;              // (i) M0 empty
    bool focusing_below_semicircle = true;  // (ii)
    bool circles_contained = true;       // (iii)
    bool no_cusps = true;                // (iv)
    std::vector<std::string> failures;

    bool ok() const { return no_neutral && focusing_below_semicircle && circles_contained && no_cusps; }
};

/// Checks the four flower conditions. Condition (iii) samples each completed circle at
/// `samples` points against the point-in-Q test and also intersects it with the boundary.
FlowerReport validate_flower_conditions(const BilliardTable& table, int samples = 10000);

/// Intersection points of two components (closed pieces), with tolerance `tol`.
std::vector<Vec2> component_intersections(const BoundaryComponent& p, const BoundaryComponent& q,
                                          double tol);

}  // namespace billiards
