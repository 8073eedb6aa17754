#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cgibbs/model.hpp"
#include "cgibbs/potentials.hpp"

using namespace cg;

namespace {

Particle at(double x0, double x1, std::uint32_t s) { return {{x0, x1}, Spin{s}}; }

// Off-K pairs with distances spread over (0, 4).
template <class Fn>
void for_random_pairs(const DecomposedPotential& dec, std::uint64_t seed, int count, Fn&& fn)
{
    RandomStream rng(seed, "pairs");
    const auto S = dec.base().spin_count();
    int done = 0;
    while (done < count) {
        const Particle a = at(rng.uniform(-1, 1), rng.uniform(-1, 1), static_cast<std::uint32_t>(rng.below(S)));
        const double r = rng.uniform(0, 4), th = rng.uniform(0, 2 * std::numbers::pi);
        const Particle b = at(a.x.x0 + r * std::cos(th), a.x.x1 + r * std::sin(th),
                              static_cast<std::uint32_t>(rng.below(S)));
        if (dec.base()(a, b).is_infinite()) continue;
        fn(a, b);
        ++done;
    }
}

Model step_model_for_support()
{
    const auto fn = WellBehavedFn::step(0.5, 2.0, 1.0, 1.0);
    return make_model("step", PottsPotential(Norm::euclidean(), 1, {fn}, 0.1), 0.2, 1.0, 0.02);
}

} // namespace

TEST_CASE("well-behaved functions follow the piece convention")
{
    const auto wr = WellBehavedFn::hard_core(1.0);
    CHECK(wr(0.5).is_infinite());
    CHECK(wr(1.0).is_infinite());
    CHECK(wr(1.5).value() == 0.0);

    const auto step = WellBehavedFn::step(0.5, 1.5, 1.0, 0.25);
    CHECK(step(1.0).value() == 1.0);
    CHECK(step(1.5).value() == 0.25);
    CHECK(step(1.6).value() == 0.0);
    CHECK(step.left_limit(1) == 1.0);
    CHECK(step.right_limit(1) == 0.0);
    CHECK_THROWS_AS(WellBehavedFn({1.0, 0.5}, {Cubic{{1, 0, 0, 0}}}, {0.0}), ParameterError);
}

TEST_CASE("hat split of a step")
{
    const auto fn = WellBehavedFn::step(0.0, 2.0, 1.0, 1.0);
    const HatSplit split(fn, 0.1);
    CHECK(split.peak(1) == 2.0);
    CHECK(split.continuous(2.0) == doctest::Approx(2.0));
    CHECK(split.small(2.0) == doctest::Approx(1.0));
    CHECK(split.small(1.9) == 0.0);
    CHECK(split.small(2.1) == 0.0);
    for (double r = 0.01; r < 4.0; r += 0.0007) {
        CHECK(split.small(r) >= 0.0);
        if (std::abs(r - 2.0) >= 0.1) CHECK(split.small(r) == 0.0);
    }
    CHECK_THROWS_AS(HatSplit(fn, 0.0), ParameterError);

    const HatSplit plain(WellBehavedFn::hard_core(1.0), 0.1);
    for (double r = 1.01; r < 3.0; r += 0.01) CHECK(plain.small(r) == 0.0);
}

TEST_CASE("the continuous part has a uniform modulus of continuity")
{
    const auto fn = WellBehavedFn({0.5, 1.0, 1.5}, {Cubic{{2.0, -1.0, 0.5, 0.0}}, Cubic{{0.3, 0.0, 0.0, 0.0}}},
                                  {3.0, 0.3});
    const HatSplit split(fn, 0.05);
    const double L = split.lipschitz();
    for (double h : {1e-2, 1e-3, 1e-4}) {
        double worst = 0.0;
        for (double r = 0.51; r < 2.0; r += 1e-4) worst = std::max(worst, std::abs(split.continuous(r + h) - split.continuous(r)));
        CHECK(worst <= L * h * (1 + 1e-9));
    }
}

TEST_CASE("pair potential values")
{
    const Model wr = widom_rowlinson_model();
    CHECK(wr.pot(at(0, 0, 0), at(0.5, 0, 1)).is_infinite());
    CHECK(wr.pot(at(0, 0, 0), at(0.01, 0, 0)).value() == 0.0);
    CHECK(wr.pot(at(0, 0, 1), at(3, 0, 1)).value() == 0.0);
    const Model zero = zero_model();
    CHECK(zero.pot(at(0.2, 0.2, 0), at(0.2, 0.2, 1)).is_infinite());

    RandomStream rng(3, "symmetry");
    const Model ps = potts_step_model();
    for (int i = 0; i < 1000; ++i) {
        const Particle a = at(rng.uniform(-1, 1), rng.uniform(-1, 1), static_cast<std::uint32_t>(rng.below(2)));
        const Particle b = at(rng.uniform(-1, 1), rng.uniform(-1, 1), static_cast<std::uint32_t>(rng.below(2)));
        CHECK(ps.pot(a, b) == ps.pot(b, a));
    }
}

TEST_CASE("pair regions are nested discs")
{
    const Model wr = widom_rowlinson_model();
    const double e = wr.pot.eps();
    CHECK(e == doctest::Approx(0.05));
    CHECK(pair_region(wr.pot, at(0, 0, 0), at(1.0, 0, 1)) == PairRegion::hard_core);
    CHECK(pair_region(wr.pot, at(0, 0, 0), at(1.0 + 0.5 * e, 0, 1)) == PairRegion::k1_minus_k);
    CHECK(pair_region(wr.pot, at(0, 0, 0), at(1.0 + 1.5 * e, 0, 1)) == PairRegion::k2_minus_k1);
    CHECK(pair_region(wr.pot, at(0, 0, 0), at(1.0 + 3.0 * e, 0, 1)) == PairRegion::outside);
}

TEST_CASE("the cutoff function is a radial smoothstep")
{
    const Model wr = widom_rowlinson_model();
    const auto& dec = wr.dec;
    const double e = wr.pot.eps();
    CHECK(dec.fK(at(0, 0, 0), at(0.7, 0, 1)) == 0.0);
    CHECK(dec.fK(at(0, 0, 0), at(1.0 + 3 * e, 0, 1)) == 1.0);
    CHECK(dec.fK(at(0, 0, 0), at(1.0 + e, 0, 1)) == doctest::Approx(0.5));

    double prev = 0.0;
    for (double d = 0.9; d < 1.2; d += 1e-4) {
        const double f = dec.fK(at(0, 0, 0), at(d, 0, 1));
        CHECK(f >= prev);
        prev = f;
    }

    RandomStream rng(4, "fK");
    for (int i = 0; i < 2000; ++i) {
        const Particle a = at(0, 0, 0);
        const double r = rng.uniform(1.0, 1.1), th = rng.uniform(0, 2 * std::numbers::pi);
        const Particle b = at(r * std::cos(th), r * std::sin(th), 1);
        const double h = 1e-7;
        const double fd = (dec.fK(a, at(b.x.x0 + h, b.x.x1, 1)) - dec.fK(a, at(b.x.x0 - h, b.x.x1, 1))) / (2 * h);
        CHECK(dec.fK_e_d1(a, b) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
        CHECK(std::abs(dec.fK_e_d1(a, b)) <= dec.constants().c_f * (1 + 1e-12));
    }
}

TEST_CASE("pure hard cores decompose trivially")
{
    const Model wr = widom_rowlinson_model();
    for_random_pairs(wr.dec, 5, 10000, [&](const Particle& a, const Particle& b) {
        CHECK(wr.dec.smooth(a, b) == 0.0);
        CHECK(wr.dec.small(a, b) == 0.0);
        CHECK(wr.dec.utilde(a, b) == 0.0);
    });
}

TEST_CASE("the small part of a step is supported near its jump")
{
    const Model m = step_model_for_support();
    const double reach = 0.1 + 0.02;
    for (double d = 0.5 + 1e-6; d < 4.0; d += 1e-4) {
        const double u = m.dec.small_at(Spin{0}, Spin{0}, d);
        CHECK(u >= 0.0);
        if (std::abs(d - 2.0) > reach + 1e-12) CHECK(u == 0.0);
    }
    CHECK(m.dec.small_at(Spin{0}, Spin{0}, 2.0) > 0.0);
}

TEST_CASE("decomposition identity and bounds on random pairs")
{
    for (const Model& m : {widom_rowlinson_model(), potts_step_model(), step_model_for_support(), zero_model(0.5, 0.3)}) {
        CAPTURE(m.name);
        for_random_pairs(m.dec, 6, 10000, [&](const Particle& a, const Particle& b) {
            const double U = m.pot(a, b).value();
            const double u = m.dec.small(a, b);
            CHECK(std::abs(m.dec.smooth(a, b) - u - U) <= 1e-9);
            CHECK(u >= 0.0);
            const double ut = m.dec.utilde(a, b);
            CHECK(ut >= 0.0);
            CHECK(ut <= std::min(u, 1.0) + 1e-15);
        });
    }
}

TEST_CASE("second derivatives of the smooth part are dominated by psi")
{
    for (const Model& m : {potts_step_model(), step_model_for_support()}) {
        CAPTURE(m.name);
        for_random_pairs(m.dec, 7, 10000, [&](const Particle& a, const Particle& b) {
            CHECK(std::abs(m.dec.smooth_e_d2(a, b)) <= m.dec.psi(a, b));
        });
    }
}

TEST_CASE("analytic derivatives of the smooth part match finite differences")
{
    const Model m = step_model_for_support();
    RandomStream rng(8, "smooth-fd");
    const Particle a = at(0, 0, 0);
    int checked = 0;
    while (checked < 2000) {
        const double r = rng.uniform(0.6, 2.3), th = rng.uniform(0, 2 * std::numbers::pi);
        const Particle b = at(r * std::cos(th), r * std::sin(th), 0);
        const double h = 1e-6;
        const auto shifted = [&](double t) { return m.dec.smooth(a, at(b.x.x0 + t, b.x.x1, 0)); };
        const double d1 = (shifted(h) - shifted(-h)) / (2 * h);
        const double d1a = m.dec.smooth_e_d1(a, b);
        const double d2a = m.dec.smooth_e_d2(a, b);
        const double d1h = (m.dec.smooth_e_d1(a, at(b.x.x0 + h, b.x.x1, 0)) - m.dec.smooth_e_d1(a, at(b.x.x0 - h, b.x.x1, 0))) / (2 * h);
        CHECK(d1a == doctest::Approx(d1).epsilon(1e-4).scale(std::abs(d1a) + 1e-3));
        // Cancellation between the radial terms sets the scale.
        const auto& sr = m.dec.smooth_radial(Spin{0}, Spin{0});
        const double d = std::hypot(b.x.x0, b.x.x1);
        CHECK(std::abs(d2a - d1h) <= 1e-4 * (std::abs(sr.d2(d)) + std::abs(sr.d1(d)) / d + 1e-3));
        ++checked;
    }
}

TEST_CASE("c_xi is the spin-averaged annulus area")
{
    const Model wr = widom_rowlinson_model(0.1);
    const double pi = std::numbers::pi;
    const double oracle = (pi * (1.1 * 1.1 - 1.0) + pi * 0.1 * 0.1) / 2.0;
    CHECK(wr.dec.constants().c_xi == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(wr.dec.annulus_area(Spin{0}, Spin{1}) == doctest::Approx(0.659734).epsilon(1e-5));

    RandomStream rng(9, "annulus");
    const int n = 400000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(-1.1, 1.1), y = rng.uniform(-1.1, 1.1);
        const double d = std::hypot(x, y);
        hits += d > 1.0 && d <= 1.1;
    }
    const double area = 4.84 * hits / n;
    CHECK(std::abs(area - wr.dec.annulus_area(Spin{0}, Spin{1})) < 4 * 4.84 * std::sqrt(0.14 * 0.86 / n));

    CHECK_THROWS_WITH_AS(widom_rowlinson_model(3.0), "activity too large for decomposition", ParameterError);
}

TEST_CASE("hamiltonian examples and agreement with brute force")
{
    const Model wr = widom_rowlinson_model();
    const Window w(2.0);
    CHECK(hamiltonian(wr.pot, Configuration(w, {}), w).value() == 0.0);
    CHECK(hamiltonian(wr.pot, Configuration(w, {at(0, 0, 0), at(0.3, 0, 0)}), w).value() == 0.0);
    CHECK(hamiltonian(wr.pot, Configuration(w, {at(0, 0, 0), at(0.5, 0, 1)}), w).is_infinite());

    const Model ps = potts_step_model();
    RandomStream rng(10, "ham");
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Particle> in, out;
        for (int i = 0; i < 30; ++i)
            in.push_back(at(rng.uniform(-2, 2), rng.uniform(-2, 2), static_cast<std::uint32_t>(rng.below(2))));
        for (int i = 0; i < 10; ++i)
            out.push_back(at(rng.uniform(2, 3), rng.uniform(-2, 2), static_cast<std::uint32_t>(rng.below(2))));
        const Configuration c(w, in, out);
        for (const Window& region : {w, Window(1.0)}) {
            CHECK(hamiltonian(ps.pot, c, region) == hamiltonian_bruteforce(ps.pot, c, region));
            CHECK(hamiltonian_smooth(ps.dec, c, region) == hamiltonian_smooth_bruteforce(ps.dec, c, region));
        }
    }
}
