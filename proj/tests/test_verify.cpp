#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cgibbs/model.hpp"
#include "cgibbs/verify.hpp"

using namespace cg;

namespace {

Particle at(double x0, double x1, std::uint32_t s = 0) { return {{x0, x1}, Spin{s}}; }

const CheckResult& find(const SuiteReport& r, const std::string& name)
{
    const auto it = std::find_if(r.checks.begin(), r.checks.end(), [&](const CheckResult& c) { return c.name == name; });
    REQUIRE_MESSAGE(it != r.checks.end(), "missing check " << name);
    return *it;
}

} // namespace

TEST_CASE("distribution tails at textbook quantiles")
{
    CHECK(chi_square_sf(3.841459, 1) == doctest::Approx(0.05).epsilon(1e-5));
    CHECK(chi_square_sf(9.487729, 4) == doctest::Approx(0.05).epsilon(1e-5));
    CHECK(kolmogorov_sf(1.358099) == doctest::Approx(0.05).epsilon(1e-4));
    CHECK(kolmogorov_sf(1.627624) == doctest::Approx(0.01).epsilon(1e-4));
    CHECK(kolmogorov_sf(0.0) == 1.0);
    CHECK(kolmogorov_sf(0.3) == doctest::Approx(1.0).epsilon(1e-5));
    // The two series meet at 1.18.
    CHECK(kolmogorov_sf(1.18 - 1e-12) == doctest::Approx(kolmogorov_sf(1.18 + 1e-12)).epsilon(1e-9));
    for (double l = 0.2; l < 3.0; l += 0.01) CHECK(kolmogorov_sf(l) >= kolmogorov_sf(l + 0.01));
}

TEST_CASE("two-sample and contingency tests")
{
    std::vector<double> a, b, c;
    RandomStream rng(1, "ks");
    for (int i = 0; i < 500; ++i) {
        a.push_back(rng.uniform());
        c.push_back(rng.uniform() + 0.3);
    }
    b = a;
    CHECK(two_sample_ks(a, b).p == doctest::Approx(1.0));
    CHECK(two_sample_ks(a, c).p < 1e-6);

    CHECK(contingency_chi_square({{50, 50}, {50, 50}}).p == doctest::Approx(1.0));
    CHECK(contingency_chi_square({{90, 10}, {10, 90}}).p < 1e-10);
    CHECK(contingency_chi_square({{10, 0, 5}, {12, 0, 4}}).dof == 1.0);

    CHECK(chi_square_gof({10, 10}, {10, 10}).statistic == 0.0);
    CHECK_THROWS_AS(chi_square_gof({1}, {1, 2}), ParameterError);

    std::vector<std::uint64_t> counts;
    for (int i = 0; i < 5000; ++i) counts.push_back(rng.poisson(3.0));
    CHECK(poisson_gof(counts, 3.0).p > 0.01);
    CHECK(poisson_gof(counts, 3.5).p < 1e-6);
}

TEST_CASE("paired z statistic")
{
    const auto zero = paired_z({0, 0, 0, 0});
    CHECK(zero.z == 0.0);
    const auto z = paired_z({1, 2, 3, 4});
    CHECK(z.mean == doctest::Approx(2.5));
    CHECK(z.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(z.z == doctest::Approx(2.5 / std::sqrt(5.0 / 12.0)));
    CHECK(z.n == 4);
}

TEST_CASE("invariance criterion on finite spaces")
{
    const auto uniform = lekrit_toy({0.25, 0.25, 0.25, 0.25}, {1, 2, 3, 0});
    CHECK(uniform.criterion);
    CHECK(uniform.invariant);
    const auto skew = lekrit_toy({0.5, 0.3, 0.2}, {1, 2, 0});
    CHECK_FALSE(skew.criterion);
    CHECK_FALSE(skew.invariant);
    const auto ident = lekrit_toy({0.5, 0.3, 0.2}, {0, 1, 2});
    CHECK(ident.criterion);
    CHECK(ident.invariant);
    // Swapping two equal masses is invariant even with unequal others.
    const auto swap = lekrit_toy({0.4, 0.4, 0.2}, {1, 0, 2});
    CHECK(swap.criterion);
    CHECK(swap.invariant);

    CHECK_THROWS_AS(lekrit_toy(std::vector<double>(21, 1.0 / 21), std::vector<std::size_t>(21, 0)), ParameterError);
    CHECK_THROWS_AS(lekrit_toy({0.5, 0.5}, {0, 0}), ParameterError);
    CHECK_THROWS_AS(lekrit_toy({0.5, 0.6}, {1, 0}), ParameterError);

    const auto suite = check_lekrit_suite(100, 7);
    CHECK(suite.passed());
    CHECK(find(suite, "random_equivalence").count == 100);
}

TEST_CASE("report bookkeeping")
{
    SuiteReport r;
    r.suite = "demo";
    CheckResult a;
    a.name = "a";
    r.add(a);
    CheckResult v;
    v.name = "b";
    v.vacuous = true;
    r.add(v);
    CHECK(r.passed());
    CHECK(r.table().find("VACUOUS") != std::string::npos);
    CheckResult c;
    c.name = "c";
    c.pass = false;
    r.add(c);
    CHECK_FALSE(r.passed());
}

TEST_CASE("hard-core violations are counted per pair")
{
    const Model wr = widom_rowlinson_model();
    CHECK(hard_core_violations(wr.pot, Configuration(Window(2), {at(0, 0, 0), at(0.5, 0, 1), at(-0.5, 0, 1)})) == 2);
    CHECK(hard_core_violations(wr.pot, Configuration(Window(2), {at(0, 0, 0), at(0.5, 0, 0)})) == 0);
}

TEST_CASE("transform suite on the zero model reports vercon as vacuous")
{
    TransformSuiteOptions o;
    o.samples = 30;
    const auto r = check_transform_suite(zero_model(0.5, 0.3), o, 11);
    CHECK(r.passed());
    CHECK(find(r, "vercon").vacuous);
    CHECK(find(r, "roundtrip_forward_inverse").measured < 1e-9);

    const auto again = check_transform_suite(zero_model(0.5, 0.3), o, 11);
    REQUIRE(again.checks.size() == r.checks.size());
    for (std::size_t i = 0; i < r.checks.size(); ++i) CHECK(again.checks[i].measured == r.checks[i].measured);
}

TEST_CASE("transform suite on poisson hard-core configurations exercises vercon")
{
    TransformSuiteOptions o;
    o.samples = 40;
    o.poisson_intensity = 0.5;
    const auto r = check_transform_suite(widom_rowlinson_model(), o, 12);
    CHECK(r.passed());
    CHECK_FALSE(find(r, "vercon").vacuous);
    CHECK(find(r, "vercon").count > 0);
}

TEST_CASE("density identity holds and fails without the Jacobian")
{
    DensityOptions o;
    o.samples = 20000;
    const Model m = zero_model(1.0, 0.05);
    const auto r = check_density_identity(m, o, 13);
    CHECK(r.passed());
    for (const auto& name : density_statistics()) CHECK(std::abs(find(r, name).measured) < 3.0);

    o.unit_density = true;
    const auto control = check_density_identity(m, o, 13);
    CHECK_FALSE(control.passed());
    double worst = 0.0;
    for (const auto& c : control.checks) worst = std::max(worst, std::abs(c.measured));
    CHECK(worst > 3.0);
}

TEST_CASE("invariance suite refuses windows near the boundary")
{
    InvarianceOptions o;
    o.half_width = 7.0;
    CHECK_THROWS_WITH_AS(check_invariance_statistical(widom_rowlinson_model(), o, 14), "boundary effect risk",
                         ParameterError);
}

TEST_CASE("closed-form and decomposition suites pass on the shipped models")
{
    CHECK(check_taper_closed_form().passed());
    for (const Model& m : {widom_rowlinson_model(), potts_step_model(), zero_model()}) {
        CAPTURE(m.name);
        const auto r = check_decomposition(m, 2000, 15);
        CHECK(r.passed());
        CHECK(find(r, "activity_bound").measured < 1.0 / (m.z * m.xi));
    }
}

TEST_CASE("zero-potential suite passes")
{
    CHECK(check_zero_potential(zero_model(), 1.0, 2000, 10, 16).passed());
}
