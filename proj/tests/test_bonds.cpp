#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "cgibbs/bonds.hpp"
#include "cgibbs/model.hpp"

using namespace cg;

namespace {

Particle at(double x0, double x1, std::uint32_t s = 0) { return {{x0, x1}, Spin{s}}; }

// One spin, step of height 1 on (0.5, 2), jump at 2 smeared over eps 0.1.
Model jump_model()
{
    const auto fn = WellBehavedFn::step(0.5, 2.0, 1.0, 1.0);
    return make_model("jump", PottsPotential(Norm::euclidean(), 1, {fn}, 0.1), 0.2, 1.0, 0.02);
}

// Distance in (2, 2.12) at which u equals target, by bisection on the decreasing flank.
double distance_with_small(const Model& m, double target)
{
    double lo = 2.0, hi = 2.12;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (m.dec.small_at(Spin{0}, Spin{0}, mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Reachability by repeated relaxation.
std::vector<std::vector<bool>> closure(std::size_t n, const std::vector<Edge>& edges)
{
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) r[i][i] = true;
    for (const auto& [a, b] : edges) r[a][b] = r[b][a] = true;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (r[i][k] && r[k][j]) r[i][j] = true;
    return r;
}

} // namespace

TEST_CASE("pure hard cores never produce bonds")
{
    const Model wr = widom_rowlinson_model(0.5);
    RandomStream rng(1, "wr-bonds");
    for (int i = 0; i < 200; ++i) {
        const auto c = sample_poisson(Window(4.0), 1.0, 2, rng);
        CHECK(sample_bonds(c, wr.dec, 3.0, rng).edges.empty());
    }
}

TEST_CASE("a pair with u = ln 2 is bonded half the time")
{
    const Model m = jump_model();
    const double d = distance_with_small(m, std::log(2.0));
    const Configuration c(Window(3.0), {at(0, 0), at(d, 0)});
    const auto cand = candidate_bonds(c, m.dec, 3.0);
    REQUIRE(cand.size() == 1);
    CHECK(cand[0].probability == doctest::Approx(0.5).epsilon(1e-9));

    RandomStream rng(2, "ln2");
    const int draws = 10000;
    int hits = 0;
    for (int i = 0; i < draws; ++i) hits += !sample_bonds(c, m.dec, 3.0, rng).edges.empty();
    CHECK(std::abs(hits / double(draws) - 0.5) <= 3.0 * std::sqrt(0.25 / draws));
}

TEST_CASE("hard-core pairs are never candidates")
{
    const Model ps = potts_step_model();
    const Configuration c(Window(2.0), {at(0, 0, 0), at(0.4, 0, 1), at(0.5, 0, 1), at(-0.5, 0, 1)});
    for (const auto& cb : candidate_bonds(c, ps.dec, 2.0))
        CHECK_FALSE(ps.pot(c.at(cb.edge.first), c.at(cb.edge.second)).is_infinite());
}

TEST_CASE("candidate bonds touch the scope window")
{
    const Model m = jump_model();
    RandomStream rng(3, "scope");
    for (int i = 0; i < 50; ++i) {
        const auto c = sample_poisson(Window(5.0), 0.5, 1, rng);
        for (const auto& cb : candidate_bonds(c, m.dec, 2.0)) {
            CHECK((Window(2.0).contains(c.at(cb.edge.first).x) || Window(2.0).contains(c.at(cb.edge.second).x)));
            CHECK(cb.edge.first < cb.edge.second);
        }
    }
}

TEST_CASE("bond frequencies match their probabilities and are independent")
{
    const Model m = jump_model();
    std::vector<Particle> ps;
    for (int k = 0; k < 50; ++k) {
        const double x = -18.0 + 5.0 * (k % 10), y = -12.0 + 6.0 * (k / 10);
        const double d = 1.95 + 0.15 * (k + 0.5) / 50.0;
        ps.push_back(at(x, y));
        ps.push_back(at(x + d, y));
    }
    const Configuration c(Window(30.0), ps);
    const auto cand = candidate_bonds(c, m.dec, 30.0);
    REQUIRE(cand.size() == 50);

    RandomStream rng(4, "freq");
    const int draws = 10000;
    std::vector<double> hits(cand.size(), 0.0);
    double both = 0.0;
    for (int i = 0; i < draws; ++i) {
        const auto b = sample_candidates(cand, 30.0, rng);
        for (std::size_t k = 0; k < cand.size(); ++k) hits[k] += b.contains(cand[k].edge.first, cand[k].edge.second);
        both += b.contains(cand[10].edge.first, cand[10].edge.second) && b.contains(cand[20].edge.first, cand[20].edge.second);
    }
    for (std::size_t k = 0; k < cand.size(); ++k) {
        const double p = cand[k].probability;
        CHECK(std::abs(hits[k] / draws - p) <= 4.0 * std::sqrt(p * (1 - p) / draws) + 1e-12);
    }
    const double p10 = hits[10] / draws, p20 = hits[20] / draws;
    const double cov = both / draws - p10 * p20;
    CHECK(std::abs(cov) <= 4.0 * std::sqrt(p10 * (1 - p10) * p20 * (1 - p20) / draws));
}

TEST_CASE("augmentation adds every pair within the enlarged core")
{
    const Model wr = widom_rowlinson_model();
    const Configuration far(Window(4.0), {at(0, 0, 0), at(2, 0, 1), at(-2, 0, 0)});
    CHECK(augment_bplus(far, {}, wr.dec).edges.empty());

    const Configuration contact(Window(4.0), {at(0, 0, 0), at(1.0, 0, 1), at(3, 3, 0)});
    const auto plus = augment_bplus(contact, {}, wr.dec);
    CHECK(plus.contains(0, 1));
    CHECK(plus.edges.size() == 1);

    BondSet distant;
    distant.edges = {{0, 2}};
    const auto kept = augment_bplus(contact, distant, wr.dec);
    CHECK(kept.contains(0, 2));
    CHECK(kept.contains(0, 1));

    const Configuration edge_of_k2(Window(4.0), {at(0, 0, 0), at(1.1, 0, 1), at(-1.1001, 0, 1)});
    const auto e2 = augment_bplus(edge_of_k2, {}, wr.dec);
    CHECK(e2.contains(0, 1));
    CHECK_FALSE(e2.contains(0, 2));
}

TEST_CASE("cluster examples")
{
    CHECK(clusters(3, {}).count() == 3);
    const auto path = clusters(3, {{0, 1}, {1, 2}});
    CHECK(path.count() == 1);
    CHECK(path.connected(0, 2));
    const auto two = clusters(4, {{0, 1}, {2, 3}});
    CHECK(two.count() == 2);
    CHECK(two.members[0] == std::vector<std::uint32_t>{0, 1});
    CHECK(two.members[1] == std::vector<std::uint32_t>{2, 3});
}

TEST_CASE("clusters agree with the transitive closure")
{
    RandomStream rng(5, "closure");
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(20);
        std::vector<Edge> edges;
        const auto m = rng.below(n + 5);
        for (std::uint64_t k = 0; k < m && n > 1; ++k) {
            auto a = static_cast<std::uint32_t>(rng.below(n)), b = static_cast<std::uint32_t>(rng.below(n));
            if (a != b) edges.emplace_back(std::min(a, b), std::max(a, b));
        }
        const auto part = clusters(n, edges);
        const auto reach = closure(n, edges);
        std::set<std::uint32_t> seen;
        for (std::size_t i = 0; i < n; ++i) {
            seen.insert(part.label[i]);
            for (std::size_t j = 0; j < n; ++j)
                CHECK(part.connected(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)) == reach[i][j]);
        }
        CHECK(seen.size() == part.count());
    }
}

TEST_CASE("cluster range examples and monotonicity")
{
    const Configuration one(Window(6.0), {at(0.3, 0)});
    CHECK(cluster_range(one, {}, Window(1.0)) == doctest::Approx(0.3));

    const Configuration chain(Window(6.0), {at(0, 0), at(1, 0), at(2, 0), at(3, 0), at(4, 0), at(5, 0)});
    BondSet path;
    path.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}};
    CHECK(cluster_range(chain, path, Window(1.0)) == doctest::Approx(5.0));

    const Configuration outside(Window(6.0), {at(3, 0), at(4, 0)});
    BondSet e;
    e.edges = {{0, 1}};
    CHECK(cluster_range(outside, e, Window(1.0)) == no_cluster);

    const Model wr = widom_rowlinson_model();
    RandomStream rng(6, "monotone");
    for (int i = 0; i < 200; ++i) {
        const auto c = sample_poisson(Window(4.0), 1.5, 2, rng);
        BondSet b;
        for (std::size_t k = 0; k + 1 < c.size(); ++k)
            if (rng.bernoulli(0.1)) b.edges.emplace_back(static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k + 1));
        b.normalize();
        const auto plus = augment_bplus(c, b, wr.dec);
        for (const auto& edge : b.edges) CHECK(plus.contains(edge.first, edge.second));
        CHECK(cluster_range(c, plus, Window(1.0)) >= cluster_range(c, b, Window(1.0)));
    }
}

TEST_CASE("bond sets reject invalid indices")
{
    const Configuration c(Window(2.0), {at(0, 0), at(1, 0)});
    BondSet loop;
    loop.edges = {{1, 1}};
    CHECK_THROWS_AS(validate_bonds(loop, c), ParameterError);
    BondSet far;
    far.edges = {{0, 7}};
    CHECK_THROWS_AS(validate_bonds(far, c), ParameterError);
}
