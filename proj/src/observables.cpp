#include "billiards/observables.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace billiards {

Observable Observable::bump(const BilliardTable& table, Vec2 q0, double rho0, std::optional<TrigFactor> trig)
{
    if (!(rho0 > 0.0)) throw std::invalid_argument("bump radius must be positive");
    if (!table.contains(q0) || !(table.distance_to_boundary(q0) > 2.0 * rho0)) {
        std::ostringstream msg;
        msg << "bump at (" << q0.x << ", " << q0.y << ") with radius " << rho0
            << " is not separated from the boundary by its radius";
        throw std::invalid_argument(msg.str());
    }
    Observable o;
    std::ostringstream name;
    name << "bump(" << q0.x << "," << q0.y << ";" << rho0 << ")";
    if (trig) name << "*cos(" << trig->kx << "x+" << trig->ky << "y+" << trig->phase << ")";
    o.name_ = name.str();
    o.smoothness_ = Smoothness::flow_smooth;
    o.has_bump_ = true;
    o.q0_ = q0;
    o.rho0_ = rho0;
    o.trig_ = trig;
    return o;
}

Observable Observable::phase(std::string name, std::function<double(const BilliardTable&, const PhasePoint&)> f)
{
    Observable o;
    o.name_ = std::move(name);
    o.smoothness_ = Smoothness::piecewise_holder;
    o.phase_fn_ = std::move(f);
    return o;
}

Observable Observable::constant(double c)
{
    Observable o;
    std::ostringstream name;
    name << "const(" << c << ")";
    o.name_ = name.str();
    o.smoothness_ = Smoothness::flow_smooth;
    o.constant_ = c;
    return o;
}

Observable Observable::shifted(double c) const
{
    Observable o = *this;
    o.offset_ += c;
    std::ostringstream name;
    name.precision(17);
    name << name_ << "-" << c;
    o.name_ = name.str();
    return o;
}

double Observable::at_position(Vec2 q) const
{
    double v = constant_ - offset_;
    if (has_bump_) {
        const Vec2 d = q - q0_;
        const double d2 = dot(d, d) / (rho0_ * rho0_);
        if (d2 < 1.0) {
            double b = std::exp(1.0 / (d2 - 1.0));
            if (trig_) b *= std::cos(trig_->kx * q.x + trig_->ky * q.y + trig_->phase);
            v += b;
        }
    }
    return v;
}

double Observable::at(const BilliardTable& table, const FlowPoint& p) const
{
    if (phase_fn_) return phase_fn_(table, p.base) - offset_;
    return at_position(flow_position(table, p));
}

double Observable::at_collision(const BilliardTable& table, const PhasePoint& x) const
{
    if (phase_fn_) return phase_fn_(table, x) - offset_;
    return at_position(position(table, x));
}

double Observable::integrate_chord(Vec2 p, Vec2 omega, double len) const
{
    if (phase_fn_) throw std::logic_error("integrate_chord needs a position-only observable");
    double total = (constant_ - offset_) * len;
    if (!has_bump_) return total;
    const Vec2 w = p - q0_;
    const double b = dot(w, omega);
    const double c = dot(w, w) - rho0_ * rho0_;
    const double disc = b * b - c;
    if (disc <= 0.0) return total;
    const double sq = std::sqrt(disc);
    const double s0 = std::max(0.0, -b - sq);
    const double s1 = std::min(len, -b + sq);
    if (s1 <= s0) return total;
    auto f = [&](double s) {
        const Vec2 q = p + omega * s;
        return at_position(q) - (constant_ - offset_);
    };
    total += boost::math::quadrature::gauss<double, 30>::integrate(f, s0, s1);
    return total;
}

double Observable::space_mean(const BilliardTable& table) const
{
    if (phase_fn_) throw std::logic_error("space_mean needs a position-only observable");
    double mean = constant_ - offset_;
    if (!has_bump_) return mean;
    using boost::math::quadrature::gauss_kronrod;
    auto radial = [&](double theta) {
        const Vec2 u = unit_vector(theta);
        auto g = [&](double rho) { return (at_position(q0_ + u * rho) - (constant_ - offset_)) * rho; };
        return gauss_kronrod<double, 61>::integrate(g, 0.0, rho0_, 8, 1e-13);
    };
    double integral;
    if (!trig_) {
        integral = 2.0 * kPi * radial(0.0);
    } else {
        // Periodic in theta: the trapezoid rule converges spectrally.
        const int m = 256;
        integral = 0.0;
        for (int k = 0; k < m; ++k) integral += radial(2.0 * kPi * k / m);
        integral *= 2.0 * kPi / m;
    }
    return mean + integral / table.area();
}

Observable flat_wall_observable(int power)
{
    return Observable::phase("flat*cos^" + std::to_string(power),
                             [power](const BilliardTable& t, const PhasePoint& x) {
                                 if (t.curvature_of(x.component) != Curvature::neutral) return 0.0;
                                 return std::pow(std::cos(x.phi), power);
                             });
}

Observable cos_phi_observable(int power)
{
    return Observable::phase("cos^" + std::to_string(power),
                             [power](const BilliardTable&, const PhasePoint& x) {
                                 return std::pow(std::cos(x.phi), power);
                             });
}

}  // namespace billiards
