#include <doctest.h>

#include <cmath>
#include <memory>

#include "billiards/errors.hpp"
#include "billiards/sections.hpp"

using namespace billiards;

namespace {

std::shared_ptr<const BilliardTable> shared(BilliardTable t) { return std::make_shared<BilliardTable>(std::move(t)); }

// Kac: the mean return time of the induced map is 1/mu(S).
void check_kac(const CrossSection& s, int samples, double tol)
{
    StreamRng rng(23, 0);
    const BilliardTable& t = s.table();
    int in = 0;
    const int trials = 400000;
    for (int i = 0; i < trials; ++i) in += s.contains(liouville_sample(t, rng));
    const double measure = static_cast<double>(in) / trials;

    double mean_n = 0.0;
    int done = 0;
    while (done < samples) {
        try {
            mean_n += static_cast<double>(induced_map(s, section_sample(s, rng)).n);
            ++done;
        } catch (const TrajectoryError&) {
        }
    }
    mean_n /= samples;
    CHECK(mean_n * measure == doctest::Approx(1.0).epsilon(tol));
}

}  // namespace

TEST_CASE("full section returns after one step")
{
    const auto t = shared(make_stadium(2.0, 1.0));
    const CrossSection s = CrossSection::full(t);
    StreamRng rng(1, 0);
    const PhasePoint x = liouville_sample(*t, rng);
    const ReturnRecord rec = induced_map(s, x);
    CHECK(rec.n == 1);
    CHECK(rec.h_hat == doctest::Approx(free_flight(*t, x)));
}

TEST_CASE("flower section")
{
    const auto t = shared(make_flower());
    const CrossSection s = CrossSection::flower(t);
    const auto& arc = t->component(0);
    REQUIRE(arc.curvature == Curvature::focusing);

    SUBCASE("dispersing collisions always belong")
    {
        StreamRng rng(2, 0);
        for (int i = 0; i < 1000; ++i) {
            const PhasePoint x = liouville_sample(*t, rng);
            if (t->curvature_of(x.component) == Curvature::dispersing) CHECK(s.contains(x));
        }
    }
    SUBCASE("only the first collision of a sliding run belongs")
    {
        StreamRng rng(3, 0);
        for (const PhasePoint& x : flower_entry_samples(s, 0, 0.05, 0.1, 50, rng)) {
            REQUIRE(s.contains(x));
            const ReturnRecord rec = induced_map(s, x);
            // Count the run along the arc independently.
            PhasePoint y = x;
            std::int64_t run = 0;
            double flight = 0.0;
            for (;;) {
                const MapStep st = advance(*t, y);
                if (st.next.component != 0) {
                    y = st.next;
                    break;
                }
                CHECK_FALSE(s.contains(st.next));
                flight += st.flight;
                ++run;
                y = st.next;
            }
            CHECK(rec.cell == run);
            CHECK(rec.g == doctest::Approx(flight).epsilon(1e-9));
            CHECK(rec.n == run + 1);
            CHECK(rec.end.component == y.component);
        }
    }
    SUBCASE("entry samples land in the requested cells")
    {
        StreamRng rng(4, 0);
        const double span = arc.span();
        for (std::int64_t n : {5, 20, 80}) {
            const double lo = span / (2.0 * (n + 2)), hi = span / (2.0 * n);
            for (const PhasePoint& x : flower_entry_samples(s, 0, lo, hi, 20, rng)) {
                CHECK(x.psi() >= lo * (1 - 1e-12));
                CHECK(x.psi() <= hi * (1 + 1e-12));
                const auto cell = s.cell_index(x);
                REQUIRE(cell.has_value());
                CHECK(*cell >= n - 1);
                CHECK(*cell <= n + 2);
            }
        }
    }
    SUBCASE("Kac") { check_kac(s, 40000, 0.03); }
}

TEST_CASE("stadium section")
{
    const auto t = shared(make_stadium(2.0, 1.0));
    const CrossSection s = CrossSection::stadium(t);
    StreamRng rng(5, 0);
    for (int i = 0; i < 1000; ++i) {
        const PhasePoint x = liouville_sample(*t, rng);
        if (t->curvature_of(x.component) == Curvature::neutral) CHECK(s.contains(x));
        if (t->curvature_of(x.component) == Curvature::focusing) {
            const PhasePoint prev = inverse_map(*t, x);
            CHECK(s.contains(x) == (t->curvature_of(prev.component) == Curvature::neutral));
        }
    }
    SUBCASE("Kac") { check_kac(s, 40000, 0.05); }
}

TEST_CASE("cusp section")
{
    const auto t = shared(make_three_cusp(1.0));
    const CrossSection s = CrossSection::cusp(t);
    const double arc = t->component(0).length;
    CHECK(s.delta() == doctest::Approx(0.05 * arc));
    StreamRng rng(6, 0);
    for (int i = 0; i < 2000; ++i) {
        const PhasePoint x = liouville_sample(*t, rng);
        CHECK(s.contains(x) == (cusp_distance(*t, x.r) > s.delta()));
    }
    SUBCASE("excursion starts")
    {
        const CrossSection wide = CrossSection::cusp(t, 0.2 * arc);
        const int corner = t->cusp_corner_indices().at(0);
        for (double depth : {0.02, 0.01, 0.005}) {
            const auto x = cusp_excursion_start(wide, corner, depth, 0.0, true);
            REQUIRE(x.has_value());
            CHECK(wide.contains(*x));
            const ReturnRecord rec = induced_map(wide, *x);
            // Deeper turning points need more collisions inside the cusp.
            CHECK(rec.n > 1);
            CHECK(rec.cell == rec.n - 1);
        }
    }
    SUBCASE("Kac") { check_kac(s, 40000, 0.05); }
}

TEST_CASE("roof sums")
{
    const auto t = shared(make_stadium(2.0, 1.0));
    const CrossSection s = CrossSection::stadium(t);
    StreamRng rng(8, 0);
    for (int i = 0; i < 200; ++i) {
        const PhasePoint x = section_sample(s, rng);
        REQUIRE(s.contains(x));
        const ReturnRecord a = induced_map(s, x);
        const ReturnRecord b = induced_map(s, a.end);
        CHECK(roof_sum(s, x, 1) == doctest::Approx(a.h_hat));
        CHECK(roof_sum(s, x, 2) == doctest::Approx(a.h_hat + b.h_hat));
        double flights = 0.0;
        PhasePoint y = x;
        for (std::int64_t k = 0; k < a.n; ++k) {
            const MapStep st = advance(*t, y);
            flights += st.flight;
            y = st.next;
        }
        CHECK(a.h_hat == doctest::Approx(flights));
    }
}

TEST_CASE("section names")
{
    for (SectionKind k : {SectionKind::full, SectionKind::flower, SectionKind::cusp, SectionKind::stadium})
        CHECK(section_kind_from_string(to_string(k)) == k);
    CHECK_THROWS(section_kind_from_string("torus"));
}
