#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <vector>

#include "cgibbs/core.hpp"

using namespace cg;

TEST_CASE("distance ignores spins and follows the norm")
{
    const Particle a{{0.0, 0.0}, Spin{0}};
    const Particle b{{3.0, 4.0}, Spin{1}};
    CHECK(distance(a, b, Norm::euclidean()) == doctest::Approx(5.0));
    CHECK(distance(a, b, Norm::max()) == doctest::Approx(4.0));
    CHECK(distance(a, a, Norm::euclidean()) == 0.0);
    CHECK(distance(a, b, Norm::euclidean()) == distance(b, a, Norm::euclidean()));
}

TEST_CASE("windows are half-open squares")
{
    for (double r : {0.5, 1.0, 3.25}) {
        const Window w(r);
        CHECK(w.contains({-r, -r}));
        CHECK_FALSE(w.contains({r, 0.0}));
        CHECK_FALSE(w.contains({0.0, r}));
        CHECK(w.contains({std::nextafter(r, 0.0), 0.0}));
    }
    CHECK_THROWS_AS(Window(0.0), ParameterError);
}

TEST_CASE("restrict moves particles outside the region to the boundary")
{
    const Configuration empty(Window(2.0), {});
    CHECK(restrict(empty, Window(1.0)).size() == 0);

    const Configuration c(Window(2.0), {{{0.5, 0.5}, Spin{0}}, {{1.0, 0.0}, Spin{1}}}, {{{2.5, 0.0}, Spin{0}}});
    const Configuration r = restrict(c, Window(1.0));
    REQUIRE(r.interior().size() == 1);
    CHECK(r.interior()[0].x == Vec2{0.5, 0.5});
    CHECK(r.boundary().size() == 2);
    CHECK(r.size() == c.size());

    const Configuration rr = restrict(r, Window(1.0));
    CHECK(rr.interior() == r.interior());
    CHECK(rr.boundary() == r.boundary());

    CHECK_THROWS_WITH_AS(restrict(c, Window(3.0)), "region exceeds window", ParameterError);
}

TEST_CASE("configurations reject duplicates and misplaced particles")
{
    CHECK_THROWS_AS(Configuration(Window(1.0), {{{0.1, 0.1}, Spin{0}}, {{0.1, 0.1}, Spin{1}}}), ParameterError);
    CHECK_THROWS_AS(Configuration(Window(1.0), {{{1.5, 0.0}, Spin{0}}}), ParameterError);
    CHECK_THROWS_AS(Configuration(Window(1.0), {}, {{{0.0, 0.0}, Spin{0}}}), ParameterError);
    CHECK_THROWS_AS(Configuration(Window(1.0), {{{NAN, 0.0}, Spin{0}}}), ParameterError);
}

TEST_CASE("norms are homogeneous, symmetric and subadditive")
{
    RandomStream rng(7, "norms");
    for (const Norm& n : {Norm::max(), Norm::euclidean(), Norm::weighted(2.0, 0.5)}) {
        for (int i = 0; i < 1000; ++i) {
            const Vec2 a{rng.uniform(-3, 3), rng.uniform(-3, 3)};
            const Vec2 b{rng.uniform(-3, 3), rng.uniform(-3, 3)};
            const double s = rng.uniform(0, 4);
            CHECK(n(s * a) == doctest::Approx(s * n(a)).epsilon(1e-12));
            CHECK(n(a - b) == doctest::Approx(n(b - a)).epsilon(1e-12));
            CHECK(n(a + b) <= n(a) + n(b) + 1e-12);
        }
    }
    CHECK(Norm::weighted(4.0, 1.0).e_length() == doctest::Approx(2.0));
    CHECK(Norm::euclidean().max_norm_stretch() == doctest::Approx(1.0));
    CHECK(Norm::weighted(0.25, 1.0).max_norm_stretch() == doctest::Approx(2.0));
    CHECK_THROWS_AS(Norm::weighted(0.0, 1.0), ParameterError);
}

TEST_CASE("norm derivative along e matches finite differences")
{
    RandomStream rng(8, "norm-d0");
    for (const Norm& n : {Norm::max(), Norm::euclidean(), Norm::weighted(2.0, 0.5)}) {
        for (int i = 0; i < 200; ++i) {
            const Vec2 v{rng.uniform(-3, 3), rng.uniform(-3, 3)};
            if (std::abs(std::abs(v.x0) - std::abs(v.x1)) < 1e-3) continue;
            const double h = 1e-6;
            const double fd = (n(v + Vec2{h, 0}) - n(v - Vec2{h, 0})) / (2 * h);
            CHECK(n.d0(v) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("random streams are deterministic per seed and label")
{
    RandomStream a(42, "chain"), b(42, "chain");
    for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
    CHECK(RandomStream(0, "x").uniform() != RandomStream(1, "x").uniform());

    RandomStream u(5, "left"), v(5, "right");
    const int n = 100000;
    double su = 0, sv = 0, suv = 0, suu = 0, svv = 0;
    for (int i = 0; i < n; ++i) {
        const double x = u.uniform(), y = v.uniform();
        su += x;
        sv += y;
        suv += x * y;
        suu += x * x;
        svv += y * y;
    }
    const double cov = suv / n - (su / n) * (sv / n);
    const double corr = cov / std::sqrt((suu / n - su * su / n / n) * (svv / n - sv * sv / n / n));
    CHECK(std::abs(corr) < 0.02);
}

TEST_CASE("split streams differ from the parent")
{
    RandomStream a(3, "root");
    RandomStream c = a.split("child");
    RandomStream d = a.split("child");
    CHECK(c.uniform() == d.uniform());
    CHECK(RandomStream(3, "root").uniform() != a.split("other").uniform());
}

TEST_CASE("extended reals give zero weight at infinity")
{
    CHECK(ExtReal::infinity().boltzmann() == 0.0);
    CHECK(ExtReal(0.0).boltzmann() == 1.0);
    CHECK((ExtReal(1.0) + ExtReal::infinity()).is_infinite());
    CHECK_THROWS(ExtReal(NAN));
    CHECK_THROWS(ExtReal(-INFINITY));
}

TEST_CASE("parallel_for visits every index once")
{
    for (unsigned threads : {1u, 3u}) {
        std::vector<std::atomic<int>> seen(1000);
        parallel_for(seen.size(), threads, [&](std::size_t i) { seen[i]++; });
        for (auto& s : seen) CHECK(s.load() == 1);
    }
}
