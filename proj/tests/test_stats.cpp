#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "billiards/errors.hpp"
#include "billiards/stats.hpp"

using namespace billiards;

namespace {

std::shared_ptr<const BilliardTable> shared(BilliardTable t) { return std::make_shared<BilliardTable>(std::move(t)); }

DecaySeries power_series(double exponent, double noise, std::uint64_t seed, int n = 400)
{
    StreamRng rng(seed, 0);
    DecaySeries s;
    for (int i = 1; i <= n; ++i) {
        const double x = i;
        s.x.push_back(x);
        s.y.push_back(std::pow(x, exponent) * (1.0 + noise * (rng.uniform() - 0.5)));
        s.se.push_back(1e-12);
    }
    return s;
}

}  // namespace

TEST_CASE("FFT lag products match the direct sums")
{
    StreamRng rng(1, 0);
    for (size_t n : {1u, 7u, 64u, 1000u, 4097u}) {
        std::vector<double> v(n), w(n);
        for (size_t i = 0; i < n; ++i) {
            v[i] = rng.uniform(-1, 1);
            w[i] = rng.uniform(-1, 1);
        }
        const size_t lags = std::min<size_t>(n, 50);
        const auto a = lag_products(v, w, lags), b = lag_products_direct(v, w, lags);
        REQUIRE(a.size() == b.size());
        for (size_t k = 0; k < lags; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("fixed-point sums are order independent")
{
    StreamRng rng(2, 0);
    std::vector<double> x(1000);
    for (auto& v : x) v = rng.uniform(-1e3, 1e3);
    FixedSum a, b;
    for (double v : x) a.add(v);
    for (auto it = x.rbegin(); it != x.rend(); ++it) b.add(*it);
    CHECK(a == b);
    FixedSum c, d;
    for (size_t i = 0; i < 500; ++i) c.add(x[i]);
    for (size_t i = 500; i < 1000; ++i) d.add(x[i]);
    c.merge(d);
    CHECK(c == a);
}

TEST_CASE("map correlation against a direct computation")
{
    const auto t = shared(make_stadium(2.0, 1.0));
    const CrossSection s = CrossSection::full(t);
    const Observable v = cos_phi_observable();
    MapCorrelationOptions opt;
    opt.collisions = 32 * 3000;
    opt.max_lag = 5;
    opt.burn_in = 10;
    const LagAccumulator acc = map_correlation_stream(s, v, v, opt, 3);

    // Same stream, recomputed by hand: one orbit with no discards.
    StreamRng rng(opt.run.seed, 3);
    PhasePoint x = section_sample(s, rng);
    for (int i = 0; i < opt.burn_in; ++i) x = billiard_map(*t, x);
    std::vector<double> vals;
    for (int i = 0; i < 3000; ++i) {
        vals.push_back(std::pow(std::cos(x.phi), 2));
        x = billiard_map(*t, x);
    }
    const auto& b = acc.batches.at(3);
    REQUIRE(b.count == 3000);
    const auto direct = lag_products_direct(vals, vals, 6);
    for (size_t k = 0; k < 6; ++k) {
        CHECK(b.lag_sum[k] == doctest::Approx(direct[k]).epsilon(1e-12));
        CHECK(b.lag_count[k] == static_cast<std::int64_t>(3000 - k));
    }
}

TEST_CASE("chunked flow sampling matches a direct computation")
{
    const BilliardTable t = make_stadium(2.0, 1.0);
    const Observable v = Observable::bump(t, t.centroid(), 0.4);
    FlowCorrelationOptions opt;
    opt.dt = 0.05;
    opt.t_max = 0.5;           // 11 lags
    opt.total_time = 30000.0;  // 600000 samples, more than two chunks
    opt.burn_in = 20;
    opt.run.streams = 1;
    const LagAccumulator acc = flow_correlation_accumulate(t, v, v, opt);

    StreamRng rng(opt.run.seed, 0);
    const FlowPoint p0 = flow_measure_sample(t, rng);
    Orbit orbit(t, p0.base);
    for (int i = 0; i < opt.burn_in; ++i) orbit.step();
    std::vector<double> vals;
    PhasePoint cur = orbit.point();
    MapStep st = orbit.step();
    double u = 0.0;
    while (vals.size() < 600000) {
        while (u >= st.flight) {
            u -= st.flight;
            cur = st.next;
            st = orbit.step();
        }
        vals.push_back(v.at_position(position(t, cur) + velocity(t, cur) * u));
        u += opt.dt;
    }
    const auto& b = acc.batches.at(0);
    REQUIRE(b.count == 600000);
    const auto direct = lag_products_direct(vals, vals, 11);
    for (size_t k = 0; k < 11; ++k) {
        CHECK(b.lag_sum[k] == doctest::Approx(direct[k]).epsilon(1e-9));
        CHECK(b.lag_count[k] == static_cast<std::int64_t>(600000 - k));
    }
}

TEST_CASE("flow correlation by two routes")
{
    const auto t = shared(make_stadium(2.0, 1.0));
    const Observable v = Observable::bump(*t, t->centroid(), 0.4);
    FlowCorrelationOptions opt;
    opt.t_max = 1.0;
    opt.dt = 0.1;
    opt.total_time = 2e5;
    const CorrelationSeries a = flow_correlation(*t, v, v, opt);
    const CorrelationSeries b = flow_correlation_section(CrossSection::stadium(t), v, v, opt, 200000);
    REQUIRE(a.rho.size() == b.rho.size());
    for (size_t k = 0; k < a.rho.size(); ++k) {
        const double se = std::hypot(a.se[k], b.se[k]);
        CHECK(std::abs(a.rho[k] - b.rho[k]) < 5.0 * se);
    }
    CHECK(a.rho[0] > 0.0);
}

TEST_CASE("accumulator merges")
{
    const auto t = shared(make_three_cusp(1.0));
    const CrossSection s = CrossSection::cusp(t);
    const Observable v = cos_phi_observable();
    MapCorrelationOptions opt;
    opt.collisions = 20000;
    opt.max_lag = 10;
    const LagAccumulator a = map_correlation_stream(s, v, v, opt, 0), b = map_correlation_stream(s, v, v, opt, 1),
                         c = map_correlation_stream(s, v, v, opt, 2);
    LagAccumulator ab(11), abc(11), bc(11), a_bc(11), cba(11);
    ab.merge(a);
    ab.merge(b);
    abc.merge(ab);
    abc.merge(c);
    bc.merge(b);
    bc.merge(c);
    a_bc.merge(a);
    a_bc.merge(bc);
    cba.merge(c);
    cba.merge(b);
    cba.merge(a);
    CHECK(abc == a_bc);
    CHECK(abc == cba);
    CHECK(abc.count == a.count + b.count + c.count);
}

TEST_CASE("serial and parallel execution agree")
{
    const auto t = shared(make_flower());
    const CrossSection s = CrossSection::flower(t);
    TailOptions opt;
    opt.returns = 20000;
    TailOptions par = opt;
    par.run.workers = 4;
    TailOptions ser = opt;
    ser.run.execution = Execution::serial;
    const TailHistogram a = tail_distribution(s, par), b = tail_distribution(s, ser);
    CHECK(a.by_stream == b.by_stream);
    CHECK(a.cells == b.cells);
    CHECK(a.returns() == 20000);
}

TEST_CASE("decay fits recover synthetic exponents")
{
    const DecaySeries p = power_series(-1.7, 0.05, 3);
    const FitReport f = decay_fit(p, DecayModel::power, 5, 400);
    CHECK(f.slope == doctest::Approx(-1.7).epsilon(0.01));
    CHECK(f.ci_low < -1.7);
    CHECK(f.ci_high > -1.7);
    CHECK(compare_models(p, 5, 400).preferred == DecayModel::power);

    DecaySeries e;
    for (int i = 1; i <= 300; ++i) {
        e.x.push_back(i);
        e.y.push_back(std::exp(-0.08 * i));
    }
    const FitReport g = decay_fit(e, DecayModel::exponential, 1, 300);
    CHECK(g.slope == doctest::Approx(-0.08).epsilon(1e-6));
    CHECK(g.rate() == doctest::Approx(std::exp(-0.08)));
    CHECK(compare_models(e, 1, 300).preferred == DecayModel::exponential);
}

TEST_CASE("decay fits need enough points above the noise floor")
{
    DecaySeries s;
    for (int i = 1; i <= 30; ++i) {
        s.x.push_back(i);
        s.y.push_back(1e-3);
        s.se.push_back(1.0);
    }
    CHECK_THROWS_AS(decay_fit(s, DecayModel::power, 1, 30), InsufficientData);
}

TEST_CASE("least squares and t quantiles")
{
    const std::vector<double> x = {0, 1, 2, 3, 4}, y = {1, 3, 5, 7, 9};
    const LinearFit f = least_squares(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.rss == doctest::Approx(0.0).scale(1.0));
    CHECK(student_t_quantile(0.95, 10) == doctest::Approx(2.228).epsilon(1e-3));
    CHECK(student_t_quantile(0.95, 1000) == doctest::Approx(1.962).epsilon(1e-3));
}

TEST_CASE("log envelope of an oscillating decay")
{
    DecaySeries s;
    for (int i = 1; i <= 2000; ++i) {
        const double x = 0.05 * i;
        s.x.push_back(x);
        s.y.push_back(std::pow(x, -1.0) * std::cos(1.5 * x));
        s.se.push_back(1e-9);
    }
    const DecaySeries env = log_envelope(s, 10, 100);
    for (size_t i = 1; i < env.x.size(); ++i) CHECK(env.x[i] > env.x[i - 1]);
    CHECK(env.x.front() >= 10.0);
    CHECK(env.x.back() <= 100.0);
    std::vector<double> lx, ly;
    for (size_t i = 0; i < env.x.size(); ++i) {
        lx.push_back(std::log(env.x[i]));
        ly.push_back(std::log(env.y[i]));
    }
    CHECK(least_squares(lx, ly).slope == doctest::Approx(-1.0).epsilon(0.05));
    CHECK_THROWS_AS(log_envelope(s, 10, 100, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(log_envelope(s, 0, 100), std::invalid_argument);
}

TEST_CASE("faster than a power")
{
    auto series = [](double exponent, double noise) {
        DecaySeries s;
        for (int i = 0; i <= 450; ++i) {
            const double x = 5.0 + 0.1 * i;
            s.x.push_back(x);
            s.y.push_back(exponent == 0.0 ? 0.0 : std::pow(x, exponent));
            s.se.push_back(noise);
        }
        return s;
    };
    SUBCASE("t^-3 passes")
    {
        const auto c = faster_than_power(series(-3.0, 1e-8), 2.0, 5, 50);
        CHECK(c.significant_start);
        CHECK(c.fit_available);
        CHECK(c.fitted_exponent == doctest::Approx(-3.0).epsilon(1e-3));
        CHECK(c.passed());
    }
    SUBCASE("t^-1 fails")
    {
        const auto c = faster_than_power(series(-1.0, 1e-8), 2.0, 5, 50);
        CHECK_FALSE(c.envelope_ok);
        CHECK_FALSE(c.passed());
    }
    SUBCASE("oscillating decay starting at a zero crossing")
    {
        for (double exponent : {-3.0, -1.0}) {
            DecaySeries s;
            for (int i = 0; i <= 450; ++i) {
                const double x = 5.0 + 0.1 * i;
                s.x.push_back(x);
                s.y.push_back(std::pow(x, exponent) * std::cos(kPi * (x - 5.0) / 2.0 + kPi / 2.0));
                s.se.push_back(1e-8);
            }
            const auto c = faster_than_power(s, 2.0, 5, 50);
            CHECK(c.significant_start);
            CHECK(c.envelope_ok == (exponent < -2.0));
        }
    }
    SUBCASE("pure noise is consistent but unresolved")
    {
        const auto c = faster_than_power(series(0.0, 1e-3), 2.0, 5, 50);
        CHECK_FALSE(c.significant_start);
        CHECK_FALSE(c.fit_available);
        CHECK(c.passed());
    }
}

TEST_CASE("survival function of a return-time histogram")
{
    TailHistogram h;
    h.by_stream[0] = {{1, 50}, {2, 30}, {4, 20}};
    h.by_stream[1] = {{1, 10}, {3, 10}};
    CHECK(h.returns() == 120);
    CHECK(h.returns(1) == 100);
    const DecaySeries s = h.survival();
    REQUIRE(s.x.size() == 3);
    CHECK(s.y[0] == doctest::Approx(60.0 / 120));  // tau > 1
    CHECK(s.y[1] == doctest::Approx(30.0 / 120));  // tau > 2
    CHECK(s.y[2] == doctest::Approx(20.0 / 120));  // tau > 3
    CHECK(s.se[2] == doctest::Approx(std::sqrt(20.0) / 120));
    const DecaySeries skip = h.survival(1, 1);
    CHECK(skip.y[0] == doctest::Approx(0.5));

    TailHistogram other;
    other.by_stream[1] = {{1, 1}};
    CHECK_THROWS_AS(h.merge(other), std::invalid_argument);
}

TEST_CASE("tail fit of a synthetic Pareto sample")
{
    // P(tau > n) = n^-2 for tau = ceil(U^(-1/2)).
    TailHistogram h;
    for (int stream = 0; stream < 16; ++stream) {
        StreamRng rng(41, static_cast<std::uint64_t>(stream));
        auto& c = h.by_stream[stream];
        for (int i = 0; i < 200000; ++i) c[static_cast<std::int64_t>(std::ceil(std::pow(1.0 - rng.uniform(), -0.5)))] += 1;
    }
    const TailFit f = fit_tail(h, 3);
    CHECK(f.models.preferred == DecayModel::power);
    CHECK(f.chosen.slope == doctest::Approx(-2.0).epsilon(0.03));
    CHECK(f.chosen.ci_low < f.chosen.slope);
    CHECK(f.chosen.ci_high > f.chosen.slope);
    CHECK(f.jackknife_se > 0.0);
}

TEST_CASE("variance model comparison")
{
    VarianceGrowth g;
    for (double T : {50.0, 100.0, 200.0, 400.0, 800.0}) {
        g.horizon.push_back(T);
        g.variance.push_back(3.0 * T * std::log(T) + 1.0);
        g.se.push_back(0.01 * T);
    }
    fit_variance_models(g);
    CHECK(g.preferred == "tlogt");
    CHECK(g.discriminating);
    CHECK(g.tlogt_c == doctest::Approx(3.0));

    for (size_t i = 0; i < g.horizon.size(); ++i) g.variance[i] = 2.0 * g.horizon[i] + 5.0;
    fit_variance_models(g);
    CHECK(g.preferred == "linear");
    CHECK(g.linear_a == doctest::Approx(2.0));
    CHECK(g.linear_b == doctest::Approx(5.0));
}

TEST_CASE("variance growth from exact chord integrals")
{
    const BilliardTable t = make_stadium(2.0, 1.0);
    const Observable v = Observable::bump(t, t.centroid(), 0.4);
    VarianceOptions opt;
    opt.ensemble = 2000;
    opt.horizons = {10, 20, 40};
    const VarianceGrowth g = variance_growth(t, v, opt);
    CHECK(g.ensemble == 2000);
    for (size_t i = 0; i < 3; ++i) CHECK(g.variance[i] > 0.0);
    CHECK(g.variance[2] > g.variance[0]);
    CHECK_THROWS_AS(variance_growth(t, cos_phi_observable(), opt), std::invalid_argument);
}

TEST_CASE("observables")
{
    const BilliardTable t = make_stadium(2.0, 1.0);
    CHECK_THROWS_AS(Observable::bump(t, {0.0, 0.0}, 0.6), std::invalid_argument);
    const Observable v = Observable::bump(t, {0.0, 0.0}, 0.4);
    CHECK(v.position_only());
    CHECK(v.at_position({0.0, 0.0}) == doctest::Approx(std::exp(-1.0)));
    CHECK(v.at_position({0.4, 0.0}) == 0.0);

    SUBCASE("chord integral against a midpoint rule")
    {
        const Vec2 p{-0.7, -0.1}, w{std::cos(0.2), std::sin(0.2)};
        const int n = 200000;
        const double len = 1.5;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += v.at_position(p + w * ((i + 0.5) * len / n));
        CHECK(v.integrate_chord(p, w, len) == doctest::Approx(sum * len / n).epsilon(1e-7));
    }
    SUBCASE("space mean against a grid")
    {
        const int n = 1000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) sum += v.at_position({-0.4 + 0.8 * (i + 0.5) / n, -0.4 + 0.8 * (j + 0.5) / n});
        CHECK(v.space_mean(t) == doctest::Approx(sum * 0.64 / (n * n) / t.area()).epsilon(1e-5));
        CHECK(v.shifted(v.space_mean(t)).space_mean(t) == doctest::Approx(0.0).scale(1.0));
    }
    SUBCASE("collision observables")
    {
        const Observable c = cos_phi_observable();
        CHECK_FALSE(c.position_only());
        const PhasePoint x{0, 1.0, 0.3};
        CHECK(c.at_collision(t, x) == doctest::Approx(std::pow(std::cos(0.3), 2)));
        const Observable f = flat_wall_observable();
        CHECK(f.at_collision(t, x) == doctest::Approx(std::pow(std::cos(0.3), 2)));
        CHECK(f.at_collision(t, PhasePoint{1, t.component(1).offset + 0.5, 0.3}) == 0.0);
    }
}

TEST_CASE("Holder estimates")
{
    std::vector<CellSample> cell;
    StreamRng rng(5, 0);
    for (int i = 0; i < 50; ++i) {
        const double r = rng.uniform(0, 1);
        cell.push_back({PhasePoint{0, r, 0.5}, 2.0 * std::sqrt(r), 0.0, 3, 1});
    }
    const HolderEstimate e = holder_modulus(cell, 0.5);
    // |2 sqrt(a) - 2 sqrt(b)| <= 2 |a - b|^(1/2).
    CHECK(e.modulus <= 2.0 + 1e-12);
    CHECK(e.modulus > 1.0);
    CHECK(e.pieces == 1);
    CHECK(e.largest_piece == 50);

    cell.push_back({PhasePoint{0, 0.5, -0.5}, 100.0, 0.0, 3, 1});
    CHECK(holder_modulus(cell, 0.5).pieces == 2);
    CHECK(holder_modulus(cell, 0.5).modulus == doctest::Approx(e.modulus));
    CHECK_THROWS_AS(holder_modulus(std::span(cell).first(5), 0.5), InsufficientData);
}
