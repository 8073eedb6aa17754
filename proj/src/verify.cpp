#include "cgibbs/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace cg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v)
{
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

CheckResult row(std::string name, bool pass, std::size_t count, double measured, double tolerance,
                std::uint64_t seed, std::string detail = {})
{
    CheckResult c;
    c.name = std::move(name);
    c.pass = pass;
    c.count = count;
    c.measured = measured;
    c.tolerance = tolerance;
    c.seed = seed;
    c.detail = std::move(detail);
    return c;
}

CheckResult vacuous_row(std::string name, std::uint64_t seed, std::string detail)
{
    CheckResult c = row(std::move(name), true, 0, 0.0, 0.0, seed, std::move(detail));
    c.vacuous = true;
    return c;
}

} // namespace

CheckResult& SuiteReport::add(CheckResult c)
{
    checks.push_back(std::move(c));
    return checks.back();
}

void SuiteReport::merge(const SuiteReport& other)
{
    for (const auto& c : other.checks) {
        CheckResult copy = c;
        if (!other.suite.empty()) copy.name = other.suite + "/" + copy.name;
        checks.push_back(std::move(copy));
    }
    seconds += other.seconds;
}

bool SuiteReport::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::string SuiteReport::table() const
{
    std::size_t w = 5;
    for (const auto& c : checks) w = std::max(w, c.name.size());
    std::ostringstream os;
    os << "suite " << suite << "  seed " << seed << "  " << std::fixed << std::setprecision(2) << seconds << " s\n";
    os << std::defaultfloat;
    os << std::left << std::setw(static_cast<int>(w) + 2) << "check" << std::setw(9) << "result" << std::setw(10)
       << "count" << std::setw(14) << "measured" << std::setw(14) << "tolerance" << "detail\n";
    for (const auto& c : checks) {
        const char* verdict = c.vacuous ? "VACUOUS" : (c.pass ? "PASS" : "FAIL");
        os << std::left << std::setw(static_cast<int>(w) + 2) << c.name << std::setw(9) << verdict << std::setw(10)
           << c.count << std::setw(14) << fmt(c.measured) << std::setw(14) << fmt(c.tolerance) << c.detail << "\n";
    }
    os << (passed() ? "PASS" : "FAIL") << "\n";
    return os.str();
}

double chi_square_sf(double statistic, double dof)
{
    if (!(dof > 0.0)) return 1.0;
    if (!(statistic > 0.0)) return 1.0;
    boost::math::chi_squared_distribution<double> dist(dof);
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

TestResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected)
{
    if (observed.size() != expected.size()) throw ParameterError("observed and expected cell counts differ in size");
    TestResult r;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (!(expected[i] > 0.0)) throw ParameterError("expected cell counts must be positive");
        const double d = observed[i] - expected[i];
        r.statistic += d * d / expected[i];
    }
    r.dof = static_cast<double>(observed.size()) - 1.0;
    r.p = chi_square_sf(r.statistic, r.dof);
    return r;
}

TestResult poisson_gof(const std::vector<std::uint64_t>& counts, double mean, double min_expected)
{
    if (counts.empty()) throw ParameterError("count histogram test needs samples");
    const double n = static_cast<double>(counts.size());
    boost::math::poisson_distribution<double> pois(mean);
    const auto top = static_cast<std::uint64_t>(mean + 12.0 * std::sqrt(mean) + 12.0);
    std::vector<double> obs(top + 1, 0.0), expd(top + 1, 0.0);
    for (auto c : counts) obs[std::min(c, top)] += 1.0;
    for (std::uint64_t k = 0; k < top; ++k) expd[k] = n * boost::math::pdf(pois, static_cast<double>(k));
    expd[top] = n * boost::math::cdf(boost::math::complement(pois, static_cast<double>(top) - 1.0));

    std::vector<double> po, pe;
    double ao = 0.0, ae = 0.0;
    for (std::size_t k = 0; k <= top; ++k) {
        ao += obs[k];
        ae += expd[k];
        if (ae >= min_expected) {
            po.push_back(ao);
            pe.push_back(ae);
            ao = ae = 0.0;
        }
    }
    if (ae > 0.0 || ao > 0.0) {
        if (pe.empty()) {
            po.push_back(ao);
            pe.push_back(ae);
        } else {
            po.back() += ao;
            pe.back() += ae;
        }
    }
    return chi_square_gof(po, pe);
}

TestResult contingency_chi_square(const std::vector<std::vector<double>>& table)
{
    TestResult r;
    if (table.size() < 2) return r;
    const std::size_t cols = table.front().size();
    std::vector<double> col(cols, 0.0), rowt(table.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (table[i].size() != cols) throw ParameterError("contingency table rows differ in length");
        for (std::size_t j = 0; j < cols; ++j) {
            col[j] += table[i][j];
            rowt[i] += table[i][j];
        }
        total += rowt[i];
    }
    if (!(total > 0.0)) return r;
    std::size_t used = 0;
    for (std::size_t j = 0; j < cols; ++j) {
        if (col[j] <= 0.0) continue;
        ++used;
        for (std::size_t i = 0; i < table.size(); ++i) {
            const double e = rowt[i] * col[j] / total;
            if (e > 0.0) r.statistic += (table[i][j] - e) * (table[i][j] - e) / e;
        }
    }
    std::size_t rows = 0;
    for (double t : rowt) rows += t > 0.0;
    r.dof = static_cast<double>((rows > 0 ? rows - 1 : 0) * (used > 0 ? used - 1 : 0));
    r.p = chi_square_sf(r.statistic, r.dof);
    return r;
}

double kolmogorov_sf(double lambda)
{
    if (!(lambda > 0.0)) return 1.0;
    constexpr double pi = 3.14159265358979323846;
    if (lambda < 1.18) {
        const double y = std::exp(-pi * pi / (8.0 * lambda * lambda));
        double s = 0.0;
        for (int k = 1; k < 40; k += 2) s += std::pow(y, static_cast<double>(k * k));
        return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

TestResult two_sample_ks(std::vector<double> a, std::vector<double> b)
{
    TestResult r;
    if (a.empty() || b.empty()) return r;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    r.statistic = d;
    r.dof = na * nb / (na + nb);
    r.p = kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
    return r;
}

ZTest paired_z(const std::vector<double>& d)
{
    ZTest z;
    z.n = d.size();
    if (d.empty()) return z;
    const double n = static_cast<double>(d.size());
    z.mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : d) ss += (v - z.mean) * (v - z.mean);
    const double var = d.size() > 1 ? ss / (n - 1.0) : 0.0;
    z.se = std::sqrt(var / n);
    if (z.se > 0.0)
        z.z = z.mean / z.se;
    else
        z.z = z.mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), z.mean);
    return z;
}

LekritOutcome lekrit_toy(const std::vector<double>& mu, const std::vector<std::size_t>& perm)
{
    const std::size_t m = mu.size();
    if (m > 20) throw ParameterError("state space too large for exhaustive enumeration");
    if (perm.size() != m) throw ParameterError("permutation and measure differ in size");
    std::vector<std::size_t> inv(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        if (perm[i] >= m || inv[perm[i]] != m) throw ParameterError("transform is not a permutation");
        inv[perm[i]] = i;
    }
    double total = 0.0;
    for (double v : mu) {
        if (!(v >= 0.0)) throw ParameterError("measure must be nonnegative");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ParameterError("measure must have total mass 1");

    constexpr double tol = 1e-12;
    LekritOutcome out;
    out.criterion = true;
    for (std::uint64_t mask = 0; mask < (1ULL << m) && out.criterion; ++mask) {
        double a = 0.0, fwd = 0.0, bwd = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (!(mask >> i & 1ULL)) continue;
            a += mu[i];
            fwd += mu[perm[i]];
            bwd += mu[inv[i]];
        }
        if (fwd + bwd < 2.0 * a - tol) out.criterion = false;
    }
    out.invariant = true;
    for (std::size_t i = 0; i < m; ++i)
        if (std::abs(mu[inv[i]] - mu[i]) > tol) out.invariant = false;
    return out;
}

SuiteReport check_lekrit_toy(const std::vector<double>& mu, const std::vector<std::size_t>& perm)
{
    SuiteReport rep;
    rep.suite = "lekrit";
    const auto o = lekrit_toy(mu, perm);
    rep.add(row("criterion_iff_invariant", o.criterion == o.invariant, std::size_t{1} << mu.size(),
                o.criterion ? 1.0 : 0.0, 0.0, 0, o.invariant ? "invariant" : "not invariant"));
    return rep;
}

SuiteReport check_lekrit_suite(std::size_t instances, std::uint64_t seed)
{
    const auto t0 = Clock::now();
    SuiteReport rep;
    rep.suite = "lekrit";
    rep.seed = seed;

    const auto uniform = lekrit_toy({0.25, 0.25, 0.25, 0.25}, {1, 2, 3, 0});
    rep.add(row("uniform_cycle", uniform.criterion && uniform.invariant, 16, 1.0, 0.0, seed,
                "criterion holds with equality"));
    const auto skew = lekrit_toy({0.5, 0.3, 0.2}, {1, 2, 0});
    rep.add(row("skewed_three_cycle", !skew.criterion && !skew.invariant, 8, skew.criterion ? 1.0 : 0.0, 0.0, seed,
                "criterion must fail"));
    const auto ident = lekrit_toy({0.5, 0.3, 0.2}, {0, 1, 2});
    rep.add(row("identity", ident.criterion && ident.invariant, 8, 1.0, 0.0, seed));

    RandomStream rng(seed, "lekrit");
    std::size_t agree = 0, invariant_cases = 0;
    for (std::size_t k = 0; k < instances; ++k) {
        const std::size_t m = 1 + rng.below(8);
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = m; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        std::vector<double> mu(m);
        if (k % 2 == 0) {
            // Constant on the cycles of perm, hence invariant.
            std::vector<double> level(m, -1.0);
            for (std::size_t i = 0; i < m; ++i) {
                if (level[i] >= 0.0) continue;
                const double v = rng.uniform(0.1, 1.0);
                for (std::size_t j = i; level[j] < 0.0; j = perm[j]) level[j] = v;
            }
            mu = level;
        } else {
            for (auto& v : mu) v = rng.uniform(0.1, 1.0);
        }
        const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
        for (auto& v : mu) v /= total;
        const auto o = lekrit_toy(mu, perm);
        agree += o.criterion == o.invariant;
        invariant_cases += o.invariant;
    }
    rep.add(row("random_equivalence", agree == instances, instances, static_cast<double>(agree), 0.0, seed,
                std::to_string(invariant_cases) + " invariant instances"));
    rep.seconds = seconds_since(t0);
    return rep;
}

void TransformAudit::merge(const TransformAudit& o)
{
    instances += o.instances;
    particles += o.particles;
    steps += o.steps;
    global_instances += o.global_instances;
    ties += o.ties;
    good += o.good;
    k_pairs += o.k_pairs;
    greps_pairs += o.greps_pairs;
    mono_fail += o.mono_fail;
    vercon_fail += o.vercon_fail;
    greps_fail += o.greps_fail;
    interp_fail += o.interp_fail;
    ordering_fail += o.ordering_fail;
    partition_fail += o.partition_fail;
    lektk_fail += o.lektk_fail;
    factor_fail += o.factor_fail;
    lipschitz_checked += o.lipschitz_checked;
    lipschitz_fail += o.lipschitz_fail;
    fd_checked += o.fd_checked;
    fd_skipped += o.fd_skipped;
    fd_fail += o.fd_fail;
    inner_outer_fail += o.inner_outer_fail;
    key_density_fail += o.key_density_fail;
    key_energy_fail += o.key_energy_fail;
    bound_density_fail += o.bound_density_fail;
    bound_energy_fail += o.bound_energy_fail;
    max_roundtrip_forward = std::max(max_roundtrip_forward, o.max_roundtrip_forward);
    max_roundtrip_inverse = std::max(max_roundtrip_inverse, o.max_roundtrip_inverse);
    max_lipschitz_ratio = std::max(max_lipschitz_ratio, o.max_lipschitz_ratio);
    max_fd_error = std::max(max_fd_error, o.max_fd_error);
    min_log_density_sum = std::min(min_log_density_sum, o.min_log_density_sum);
    max_energy_excess = std::max(max_energy_excess, o.max_energy_excess);
    max_density_bound_gap = std::max(max_density_bound_gap, o.max_density_bound_gap);
    max_energy_bound_gap = std::max(max_energy_bound_gap, o.max_energy_bound_gap);
}

namespace {

double max_position_error(const Configuration& a, const Configuration& b)
{
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, max_abs(a.at(i).x - b.at(i).x));
    return e;
}

bool same_partition(const TransformResult& a, const TransformResult& b)
{
    if (a.partition.size() != b.partition.size()) return false;
    for (std::size_t k = 0; k < a.partition.size(); ++k) {
        const auto& x = a.partition[k];
        const auto& y = b.partition[k];
        if (x.P != y.P || x.C != y.C || x.tau != y.tau) return false;
    }
    return true;
}

std::size_t count_in(const Configuration& c, const Window& w)
{
    std::size_t k = 0;
    for (std::size_t i = 0; i < c.size(); ++i) k += w.contains(c.at(i).x);
    return k;
}

} // namespace

TransformAudit audit_transform(const Configuration& config, const BondSet& bonds, const TaperParams& p_in,
                               const DecomposedPotential& dec, const AuditOptions& opts)
{
    TaperParams p = p_in;
    p.direction = 1;
    TransformAudit a;
    a.instances = 1;
    a.particles = config.size();
    const auto fwd = forward_transform(config, bonds, p, dec);
    a.steps = fwd.partition.size();
    a.ties = fwd.ties;
    a.global_instances = fwd.global_sources > 0;
    const std::size_t n = config.size();
    const Norm& norm = dec.base().norm();

    // Partition: C_k disjoint, covering, P_k inside C_k.
    {
        std::vector<int> seen(n, 0);
        bool ok = true;
        for (const auto& s : fwd.partition) {
            for (auto i : s.C) ok = ok && ++seen[i] == 1;
            for (auto i : s.P) ok = ok && std::binary_search(s.C.begin(), s.C.end(), i);
            ok = ok && !s.P.empty();
        }
        for (int v : seen) ok = ok && v == 1;
        a.partition_fail += !ok;
    }
    for (std::size_t k = 1; k < fwd.partition.size(); ++k)
        a.mono_fail += fwd.partition[k].tau < fwd.partition[k - 1].tau;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = fwd.t_map[i];
        const double cap = tau_Rn(max_abs(config.at(i).x), p);
        a.ordering_fail += !(t >= 0.0 && t <= cap && cap <= p.tau);
    }
    for (const auto& f : fwd.factors) a.factor_fail += !(f.factor >= 0.5 - 1e-12 && f.factor <= 1.5 + 1e-12);

    // vercon and greps, including the interpolated form.
    const double core = dec.base().max_hard_core();
    if (core > 0.0) {
        const double reach = core + p.tau * norm.e_length() + 1e-9;
        for (const auto& [i, j] : pairs_within(config, norm, reach, std::nullopt)) {
            const Particle& yi = config.at(i);
            const Particle& yj = config.at(j);
            const double r0 = dec.base().hard_core(yi.spin, yj.spin);
            if (r0 <= 0.0) continue;
            const Vec2 v = yj.x - yi.x;
            if (norm(v) <= r0) {
                ++a.k_pairs;
                a.vercon_fail += fwd.t_map[i] != fwd.t_map[j];
                continue;
            }
            ++a.greps_pairs;
            const double dt = fwd.t_map[j] - fwd.t_map[i];
            a.greps_fail += !(norm(fwd.transformed.at(j).x - fwd.transformed.at(i).x) > r0);
            for (double s : {-1.0, -0.5, -0.25, 0.25, 0.5, 1.0})
                a.interp_fail += !(norm(v + Vec2{s * dt, 0.0}) > r0);
        }
    }

    // t_{k+1} equals tau_k on C_k.
    const StepFunctions steps(config, fwd, p, dec);
    for (std::size_t k = 0; k < fwd.partition.size(); ++k)
        for (auto i : fwd.partition[k].C)
            a.lektk_fail += std::abs(steps.eval(k + 1, config.at(i)).value - fwd.partition[k].tau) > 1e-12;

    if (opts.lipschitz && !fwd.partition.empty()) {
        RandomStream rng(opts.seed, "audit/lipschitz");
        std::vector<std::size_t> ks{0, fwd.partition.size()};
        while (ks.size() < opts.lipschitz_steps + 2 && ks.size() < fwd.partition.size() + 1)
            ks.push_back(rng.below(fwd.partition.size() + 1));
        const std::size_t cap = std::min<std::size_t>(n, 50);
        for (auto k : ks)
            for (std::size_t i = 0; i < cap; ++i) {
                Particle y = config.at(i);
                y.x.x0 += rng.uniform(-0.5, 0.5);
                const double base = steps.eval(k, y).value;
                for (double h : {1e-3, 1e-2, 0.1}) {
                    Particle z = y;
                    z.x.x0 += h;
                    const double ratio = std::abs(steps.eval(k, z).value - base) / h;
                    ++a.lipschitz_checked;
                    a.max_lipschitz_ratio = std::max(a.max_lipschitz_ratio, ratio);
                    a.lipschitz_fail += ratio > 0.5 + 1e-9;
                }
            }
    }

    if (opts.finite_difference) {
        constexpr double h = 1e-6;
        std::size_t checked = 0;
        for (const auto& f : fwd.factors) {
            if (checked >= 50) break;
            const Particle y = config.at(f.particle);
            Particle lo = y, hi = y;
            lo.x.x0 -= h;
            hi.x.x0 += h;
            const double v0 = steps.eval(f.step, y).value;
            const double vl = steps.eval(f.step, lo).value;
            const double vh = steps.eval(f.step, hi).value;
            const double left = (v0 - vl) / h, right = (vh - v0) / h;
            if (f.tie || std::abs(left - right) > 1e-3) {
                ++a.fd_skipped;
                continue;
            }
            ++checked;
            ++a.fd_checked;
            const double fd = (vh - vl) / (2.0 * h);
            const double err = std::abs(fd - f.deriv);
            a.max_fd_error = std::max(a.max_fd_error, err);
            a.fd_fail += err > 1e-4 * std::max(std::abs(f.deriv), std::abs(fd)) + 1e-7;
        }
    }

    // Both round trips, forward and backward.
    {
        const auto back = inverse_transform(fwd.transformed, bonds, p, dec);
        a.max_roundtrip_forward = max_position_error(back.transformed, config);
        const auto pre = inverse_transform(config, bonds, p, dec);
        const auto again = forward_transform(pre.transformed, bonds, p, dec);
        a.max_roundtrip_inverse = max_position_error(again.transformed, config);
    }

    const auto rep = good_config_report(config, bonds, p, dec);
    if (rep.is_good) {
        a.good = 1;
        const Window inner(p.nprime), outer(p.n);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 x = config.at(i).x;
            if (inner.contains(x) && std::abs(fwd.t_map[i] - p.tau) > 1e-12) ++a.inner_outer_fail;
            if (!outer.contains(x) && fwd.t_map[i] != 0.0) ++a.inner_outer_fail;
        }
        if (count_in(fwd.transformed, outer) != count_in(config, outer)) ++a.inner_outer_fail;
    }

    if (opts.key_estimates) {
        TaperParams pb = p;
        pb.direction = -1;
        const auto bwd = backward_transform(config, bonds, pb, dec);
        {
            const auto back = inverse_transform(bwd.transformed, bonds, pb, dec);
            a.max_roundtrip_forward = std::max(a.max_roundtrip_forward, max_position_error(back.transformed, config));
        }
        a.partition_fail += !same_partition(fwd, bwd);
        const double log_sum = std::log(fwd.density) + std::log(bwd.density);
        a.min_log_density_sum = std::min(0.0, log_sum);
        double deriv_bound = 0.0;
        for (const auto& f : fwd.factors) deriv_bound += 2.0 * f.deriv * f.deriv;
        const double dgap = -log_sum - deriv_bound;
        a.max_density_bound_gap = dgap;
        a.bound_density_fail += dgap > 1e-12;

        const Window region(p.n);
        const double h0 = hamiltonian_smooth(dec, config, region);
        const double hf = hamiltonian_smooth(dec, fwd.transformed, region);
        const double hb = hamiltonian_smooth(dec, bwd.transformed, region);
        const double excess = hf + hb - 2.0 * h0;
        a.max_energy_excess = excess;
        double taylor = 0.0;
        if (dec.constants().psi_level > 0.0)
            for (const auto& [i, j] : pairs_within(config, norm, dec.constants().psi_range, region)) {
                const double d = fwd.t_map[i] - fwd.t_map[j];
                taylor += dec.psi(config.at(i), config.at(j)) * d * d;
            }
        const double egap = excess - taylor;
        a.max_energy_bound_gap = egap;
        a.bound_energy_fail += egap > 1e-9 * (1.0 + std::abs(h0));
        if (rep.is_good) {
            a.key_density_fail += log_sum < -p.delta;
            a.key_energy_fail += excess > p.delta;
        }
    }
    return a;
}

void add_audit_checks(SuiteReport& report, const TransformAudit& a, std::uint64_t seed, const std::string& prefix)
{
    const std::string inst = std::to_string(a.instances) + " instances";
    report.add(row(prefix + "partition", a.partition_fail == 0, a.instances, static_cast<double>(a.partition_fail),
                   0.0, seed, "C_k disjoint and covering, P_k in C_k, forward and backward partitions equal"));
    report.add(row(prefix + "mono", a.mono_fail == 0, a.steps, static_cast<double>(a.mono_fail), 0.0, seed,
                   "tau_k nondecreasing over " + std::to_string(a.steps) + " steps"));
    if (a.k_pairs == 0)
        report.add(vacuous_row(prefix + "vercon", seed, "no hard-core pairs in " + inst));
    else
        report.add(row(prefix + "vercon", a.vercon_fail == 0, a.k_pairs, static_cast<double>(a.vercon_fail), 0.0,
                       seed, "exact equality of t on hard-core pairs"));
    if (a.greps_pairs == 0) {
        report.add(vacuous_row(prefix + "greps", seed, "no pairs near the hard core"));
    } else {
        report.add(row(prefix + "greps", a.greps_fail == 0, a.greps_pairs, static_cast<double>(a.greps_fail), 0.0,
                       seed, "pairs outside K stay outside K"));
        report.add(row(prefix + "greps_interpolated", a.interp_fail == 0, 6 * a.greps_pairs,
                       static_cast<double>(a.interp_fail), 0.0, seed, "s in {-1,-1/2,-1/4,1/4,1/2,1}"));
    }
    report.add(row(prefix + "ordering", a.ordering_fail == 0, a.particles, static_cast<double>(a.ordering_fail), 0.0,
                   seed, "0 <= t <= tau_Rn(|y|) <= tau"));
    report.add(row(prefix + "step_consistency", a.lektk_fail == 0, a.particles, static_cast<double>(a.lektk_fail),
                   1e-12, seed, "t_{k+1} = tau_k on C_k"));
    report.add(row(prefix + "factor_range", a.factor_fail == 0, a.instances, static_cast<double>(a.factor_fail), 0.0,
                   seed, "every |1 + d_e t_k| in [1/2, 3/2]"));
    if (a.lipschitz_checked > 0)
        report.add(row(prefix + "lipschitz", a.lipschitz_fail == 0, a.lipschitz_checked, a.max_lipschitz_ratio,
                       0.5 + 1e-9, seed, "difference quotients of t_k along e"));
    if (a.fd_checked > 0)
        report.add(row(prefix + "derivative_fd", a.fd_fail == 0, a.fd_checked, a.max_fd_error, 1e-4, seed,
                       std::to_string(a.fd_skipped) + " points skipped at kinks or ties"));
    report.add(row(prefix + "roundtrip_forward_inverse", a.max_roundtrip_forward < 1e-9, a.instances,
                   a.max_roundtrip_forward, 1e-9, seed, "inverse(forward(X)) and inverse(backward(X))"));
    report.add(row(prefix + "roundtrip_inverse_forward", a.max_roundtrip_inverse < 1e-9, a.instances,
                   a.max_roundtrip_inverse, 1e-9, seed, "forward(inverse(X))"));
    const std::string good = std::to_string(a.good) + " good of " + inst;
    if (a.good == 0) {
        report.add(vacuous_row(prefix + "inner_outer", seed, good));
        report.add(vacuous_row(prefix + "key_density", seed, good));
        report.add(vacuous_row(prefix + "key_energy", seed, good));
    } else {
        report.add(row(prefix + "inner_outer", a.inner_outer_fail == 0, a.good,
                       static_cast<double>(a.inner_outer_fail), 1e-12, seed, good));
        report.add(row(prefix + "key_density", a.key_density_fail == 0, a.good,
                       static_cast<double>(a.key_density_fail), 0.0, seed, "log phi + log phibar >= -delta"));
        report.add(row(prefix + "key_energy", a.key_energy_fail == 0, a.good, static_cast<double>(a.key_energy_fail),
                       0.0, seed, "H(TY) + H(TbarY) <= 2 H(Y) + delta"));
    }
    report.add(row(prefix + "density_bound", a.bound_density_fail == 0, a.instances, a.max_density_bound_gap, 1e-12,
                   seed, "-log phi - log phibar <= sum 2 (d_e t_k)^2"));
    report.add(row(prefix + "energy_bound", a.bound_energy_fail == 0, a.instances, a.max_energy_bound_gap, 1e-9,
                   seed, "smooth energy excess <= sum psi (t - t')^2"));
}

SuiteReport check_transform_suite(const Model& model, const TransformSuiteOptions& opts, std::uint64_t seed,
                                  TransformAudit* audit_out, std::vector<Configuration>* samples_out)
{
    const auto t0 = Clock::now();
    if (opts.window < opts.n) throw ParameterError("simulation window must contain Lambda_n");
    const TaperParams p = make_taper(opts.tau, opts.R, opts.n, opts.nprime, opts.delta, model.dec);
    SuiteReport rep;
    rep.suite = "transform";
    rep.seed = seed;

    std::vector<Configuration> configs;
    configs.reserve(opts.samples);
    RandomStream rng(seed, "transform/configs");
    if (opts.poisson_intensity > 0.0) {
        for (std::size_t s = 0; s < opts.samples; ++s)
            configs.push_back(sample_poisson(Window(opts.window), opts.poisson_intensity, model.pot.spin_count(), rng));
    } else {
        GibbsChain chain(model.gibbs(opts.window));
        for (std::size_t s = 0; s < model.sampler.burn_in; ++s) chain.sweep(rng);
        for (std::size_t s = 0; s < opts.samples; ++s) {
            for (std::size_t k = 0; k < opts.spacing; ++k) chain.sweep(rng);
            configs.push_back(chain.configuration());
        }
    }
    std::size_t largest = 0;
    for (const auto& c : configs) largest = std::max(largest, c.size());

    std::vector<TransformAudit> audits(configs.size());
    parallel_for(configs.size(), opts.threads, [&](std::size_t i) {
        RandomStream brng(seed, "transform/bonds/" + std::to_string(i));
        const BondSet bonds = sample_bonds(configs[i], model.dec, opts.n, brng);
        AuditOptions ao;
        ao.seed = splitmix64(seed ^ i);
        audits[i] = audit_transform(configs[i], bonds, p, model.dec, ao);
    });
    TransformAudit total;
    for (const auto& a : audits) total.merge(a);

    rep.add(row("instances", largest <= opts.max_particles, total.instances, static_cast<double>(largest),
                static_cast<double>(opts.max_particles), seed,
                std::to_string(total.global_instances) + " used the constant distortion branch"));
    add_audit_checks(rep, total, seed, "");
    if (audit_out) *audit_out = total;
    if (samples_out) *samples_out = std::move(configs);
    rep.seconds = seconds_since(t0);
    return rep;
}

std::vector<std::string> density_statistics()
{
    return {"one", "count_inner", "pair_inner", "count_ramp", "smooth"};
}

double density_statistic(std::size_t which, const Configuration& config)
{
    const Window inner(1.0);
    switch (which) {
    case 0:
        return 1.0;
    case 1:
    case 2: {
        std::size_t k = 0;
        for (const auto& y : config.interior()) k += inner.contains(y.x);
        return which == 1 ? static_cast<double>(k) : (k >= 2 ? 1.0 : 0.0);
    }
    case 3: {
        std::size_t k = 0;
        for (const auto& y : config.interior()) k += y.x.x0 >= 1.5 && y.x.x0 < 2.9 && y.x.x1 >= -1.0 && y.x.x1 < 1.0;
        return static_cast<double>(k);
    }
    case 4: {
        double s = 0.0;
        for (const auto& y : config.interior()) {
            const Vec2 d = y.x - Vec2{1.8, 0.3};
            s += 0.5 * std::exp(-2.0 * (d.x0 * d.x0 + d.x1 * d.x1));
        }
        return std::exp(-s);
    }
    default:
        throw ParameterError("unknown density statistic");
    }
}

SuiteReport check_density_identity(const Model& model, const DensityOptions& opts, std::uint64_t seed)
{
    const auto t0 = Clock::now();
    if (opts.samples < 2) throw ParameterError("density identity needs at least two samples");
    const TaperParams p = make_taper(opts.tau, opts.R, opts.n, opts.nprime, 0.25, model.dec);
    const Window window(opts.n);
    const auto names = density_statistics();
    const std::size_t m = names.size();
    std::vector<double> diffs(opts.samples * m);
    std::vector<std::size_t> bond_counts(opts.samples, 0);

    parallel_for(opts.samples, opts.threads, [&](std::size_t i) {
        RandomStream rng(seed, "density/" + std::to_string(i));
        const Configuration y = sample_poisson(window, opts.intensity, model.pot.spin_count(), rng);
        const BondSet b = sample_bonds(y, model.dec, opts.n, rng);
        bond_counts[i] = b.edges.size();
        const auto fwd = forward_transform(y, b, p, model.dec);
        // Sampling B from the bond process weights bond sets by e^{-H^u}; undo the change of H^u.
        const double shift_weight = std::exp(hamiltonian_small(model.dec, y, window) -
                                             hamiltonian_small(model.dec, fwd.transformed, window));
        const double phi = opts.unit_density ? 1.0 : fwd.density;
        for (std::size_t j = 0; j < m; ++j)
            diffs[i * m + j] =
                density_statistic(j, fwd.transformed) * phi * shift_weight - density_statistic(j, y);
    });

    SuiteReport rep;
    rep.suite = opts.unit_density ? "density-control" : "density";
    rep.seed = seed;
    const std::size_t bonds = std::accumulate(bond_counts.begin(), bond_counts.end(), std::size_t{0});
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> d(opts.samples);
        for (std::size_t i = 0; i < opts.samples; ++i) d[i] = diffs[i * m + j];
        const auto z = paired_z(d);
        rep.add(row(names[j], std::abs(z.z) < 3.0, z.n, z.z, 3.0, seed,
                    "mean diff " + fmt(z.mean) + " se " + fmt(z.se) + ", " + std::to_string(bonds) + " bonds"));
    }
    rep.seconds = seconds_since(t0);
    return rep;
}

SuiteReport check_invariance_statistical(const Model& model, const InvarianceOptions& opts, std::uint64_t seed,
                                         std::vector<Configuration>* samples_out)
{
    const auto t0 = Clock::now();
    const double extent = opts.half_width + std::abs(opts.shift);
    if (!(extent < opts.window - model.pot.range())) throw ParameterError("boundary effect risk");

    SuiteReport rep;
    rep.suite = "invariance";
    rep.seed = seed;
    RandomStream rng(seed, "invariance");
    const std::uint32_t spins = model.pot.spin_count();
    auto ring = poisson_ring(Window(opts.window), opts.ring_width, opts.ring_intensity, spins, rng);
    GibbsParams gp = model.gibbs(opts.window, std::move(ring));
    gp.birth_tilt = opts.birth_tilt;
    GibbsChain chain(std::move(gp));
    for (std::size_t s = 0; s < opts.burn_in; ++s) chain.sweep(rng);

    const double h = opts.half_width;
    auto in_region = [&](Vec2 x, double offset) {
        return x.x0 >= -h + offset && x.x0 < h + offset && x.x1 >= -h && x.x1 < h;
    };
    std::vector<std::uint64_t> count_a, count_b;
    std::vector<std::vector<double>> spin_table(2, std::vector<double>(spins, 0.0));
    std::vector<double> pairs_a, pairs_b;
    const Norm& norm = model.pot.norm();
    for (std::size_t s = 0; s < opts.samples; ++s) {
        for (std::size_t k = 0; k < opts.thinning; ++k) chain.sweep(rng);
        const auto& ps = chain.interior();
        for (int r = 0; r < 2; ++r) {
            const double off = r == 0 ? 0.0 : opts.shift;
            std::vector<const Particle*> in;
            for (const auto& q : ps)
                if (in_region(q.x, off)) in.push_back(&q);
            (r == 0 ? count_a : count_b).push_back(in.size());
            for (const auto* q : in) spin_table[r][q->spin.id] += 1.0;
            auto& dest = r == 0 ? pairs_a : pairs_b;
            for (std::size_t i = 0; i < in.size(); ++i)
                for (std::size_t j = i + 1; j < in.size(); ++j) dest.push_back(norm(in[i]->x - in[j]->x));
        }
        if (samples_out) samples_out->push_back(chain.configuration());
    }

    // Count histograms, tail pooled until every column total is at least 10.
    std::uint64_t top = 0;
    for (auto c : count_a) top = std::max(top, c);
    for (auto c : count_b) top = std::max(top, c);
    std::vector<std::vector<double>> hist(2, std::vector<double>(top + 1, 0.0));
    for (auto c : count_a) hist[0][c] += 1.0;
    for (auto c : count_b) hist[1][c] += 1.0;
    while (hist[0].size() > 1 && hist[0].back() + hist[1].back() < 10.0) {
        for (auto& r : hist) {
            const double last = r.back();
            r.pop_back();
            r.back() += last;
        }
    }
    const double level = opts.alpha / 3.0;
    const auto tc = contingency_chi_square(hist);
    double mean_a = 0.0, mean_b = 0.0;
    for (auto c : count_a) mean_a += static_cast<double>(c);
    for (auto c : count_b) mean_b += static_cast<double>(c);
    mean_a /= static_cast<double>(opts.samples);
    mean_b /= static_cast<double>(opts.samples);
    rep.add(row("counts", tc.p > level, opts.samples, tc.p, level, seed,
                "chi2 " + fmt(tc.statistic) + " dof " + fmt(tc.dof) + ", mean " + fmt(mean_a) + " vs " + fmt(mean_b)));
    const auto ts = contingency_chi_square(spin_table);
    if (ts.dof > 0.0)
        rep.add(row("spins", ts.p > level, opts.samples, ts.p, level, seed,
                    "chi2 " + fmt(ts.statistic) + " dof " + fmt(ts.dof)));
    else
        rep.add(vacuous_row("spins", seed, "single spin category observed"));
    if (pairs_a.empty() || pairs_b.empty()) {
        rep.add(vacuous_row("pair_distance", seed, "no pairs inside the windows"));
    } else {
        const auto tk = two_sample_ks(pairs_a, pairs_b);
        rep.add(row("pair_distance", tk.p > level, pairs_a.size() + pairs_b.size(), tk.p, level, seed,
                    "KS D " + fmt(tk.statistic)));
    }
    rep.seconds = seconds_since(t0);
    return rep;
}

std::vector<GoodSetPoint> good_set_trend(const Model& model, const GoodSetOptions& opts, std::uint64_t seed)
{
    std::vector<GoodSetPoint> out;
    for (const auto& [R, n] : opts.radii) {
        const TaperParams p = make_taper(opts.tau, R, n, opts.nprime, opts.delta, model.dec);
        RandomStream rng(seed, "good/" + std::to_string(R) + "/" + std::to_string(n));
        GibbsChain chain(model.gibbs(n));
        for (std::size_t s = 0; s < opts.burn_in; ++s) chain.sweep(rng);
        GoodSetPoint pt;
        pt.R = R;
        pt.n = n;
        std::size_t bad = 0;
        for (std::size_t d = 0; d < opts.draws; ++d) {
            for (std::size_t k = 0; k < opts.spacing; ++k) chain.sweep(rng);
            const Configuration y = chain.configuration();
            const BondSet b = sample_bonds(y, model.dec, n, rng);
            const auto rep = good_config_report(y, b, p, model.dec);
            bad += !rep.is_good;
            pt.mean_sigma += rep.sigma_total();
            for (int i = 0; i < 5; ++i) pt.mean_sigma_parts[i] += rep.sigma[i];
            pt.mean_particles += static_cast<double>(y.size());
        }
        const double draws = static_cast<double>(std::max<std::size_t>(opts.draws, 1));
        pt.bad_fraction = static_cast<double>(bad) / draws;
        pt.mean_sigma /= draws;
        for (auto& v : pt.mean_sigma_parts) v /= draws;
        pt.mean_particles /= draws;
        out.push_back(pt);
    }
    return out;
}

SuiteReport check_good_set_trend(const Model& model, const GoodSetOptions& opts, std::uint64_t seed,
                                 std::vector<GoodSetPoint>* points)
{
    const auto t0 = Clock::now();
    const auto pts = good_set_trend(model, opts, seed);
    SuiteReport rep;
    rep.suite = "good-set";
    rep.seed = seed;
    bool monotone = true;
    std::string trail;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i > 0 && pts[i].bad_fraction > pts[i - 1].bad_fraction) monotone = false;
        trail += (i ? ", " : "") + std::string("(") + std::to_string(pts[i].R) + "," + std::to_string(pts[i].n) +
                 "): " + fmt(pts[i].bad_fraction) + " mean sigma " + fmt(pts[i].mean_sigma);
    }
    rep.add(row("nonincreasing", monotone, pts.size() * opts.draws, pts.empty() ? 0.0 : pts.front().bad_fraction, 0.0,
                seed, trail));
    const double last = pts.empty() ? 1.0 : pts.back().bad_fraction;
    rep.add(row("below_delta", last < opts.delta, opts.draws, last, opts.delta, seed,
                "non-good fraction at the largest (R, n)"));
    if (points) *points = pts;
    rep.seconds = seconds_since(t0);
    return rep;
}

SuiteReport check_taper_closed_form(double tolerance)
{
    const auto t0 = Clock::now();
    SuiteReport rep;
    rep.suite = "taper";
    const double s = taper_root();
    rep.add(row("root", std::abs(s * std::log(s) - 1.0) < 1e-15, 1, s, 1e-15, 0, "s log s = 1"));
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto q = [](double x) { return q_taper(x); };
    for (double k : {0.5, 1.0, s, 2.0, 10.0, 100.0}) {
        double quad = GK::integrate(q, 0.0, std::min(k, s), 15, 1e-14);
        if (k > s) quad += GK::integrate(q, s, k, 15, 1e-14);
        const double err = std::abs(Q_taper(k) - quad);
        rep.add(row("Q(" + fmt(k) + ")", err <= tolerance, 1, err, tolerance, 0,
                    "closed form " + fmt(Q_taper(k)) + ", quadrature " + fmt(quad)));
    }
    rep.seconds = seconds_since(t0);
    return rep;
}

SuiteReport check_decomposition(const Model& model, std::size_t pairs, std::uint64_t seed)
{
    const auto t0 = Clock::now();
    SuiteReport rep;
    rep.suite = "decomposition";
    rep.seed = seed;
    const auto& pot = model.pot;
    const auto& dec = model.dec;
    const Norm& norm = pot.norm();
    RandomStream rng(seed, "decomposition");
    const std::uint32_t spins = pot.spin_count();

    std::size_t off_k = 0, identity_fail = 0, neg_fail = 0, tilde_fail = 0, majorant_fail = 0;
    double worst = 0.0;
    auto probe = [&](Spin a, Spin b, double d) {
        const double angle = rng.uniform(0.0, 6.283185307179586);
        Vec2 v{std::cos(angle), std::sin(angle)};
        v = (d / norm(v)) * v;
        const Particle pa{{0.0, 0.0}, a};
        const Particle pb{v, b};
        const double dist = norm(pb.x - pa.x);
        const double u = dec.small(pa, pb);
        const double ut = dec.utilde(pa, pb);
        neg_fail += !(u >= 0.0);
        tilde_fail += !(ut <= std::min(u, 1.0) + 1e-15 && ut >= 0.0);
        const ExtReal U = pot(pa, pb);
        if (U.is_infinite() || dist <= pot.hard_core(a, b)) return;
        ++off_k;
        const double smooth = dec.smooth(pa, pb);
        majorant_fail += smooth < U.value() - 1e-12;
        const double err = std::abs(U.value() - (smooth - u));
        worst = std::max(worst, err);
        identity_fail += err > 1e-9;
    };
    const double top = std::max(pot.range(), dec.smooth_range()) * 1.2 + 0.5;
    for (std::size_t k = 0; k < pairs; ++k) {
        const Spin a{static_cast<std::uint32_t>(rng.below(spins))};
        const Spin b{static_cast<std::uint32_t>(rng.below(spins))};
        probe(a, b, rng.uniform(0.0, top));
    }
    for (std::uint32_t a = 0; a < spins; ++a)
        for (std::uint32_t b = 0; b < spins; ++b)
            for (double r : pot.fn(Spin{a}, Spin{b}).breakpoints())
                for (double d : {r, std::nextafter(r, 0.0), std::nextafter(r, 2.0 * r + 1.0), r + 1e-9, r - 1e-9})
                    if (d > 0.0) probe(Spin{a}, Spin{b}, d);

    rep.add(row("identity_off_core", identity_fail == 0, off_k, worst, 1e-9, seed, "U = smooth - small"));
    rep.add(row("smooth_majorant", majorant_fail == 0, off_k, static_cast<double>(majorant_fail), 1e-12, seed,
                "smooth >= U off the hard core"));
    rep.add(row("small_nonnegative", neg_fail == 0, pairs, static_cast<double>(neg_fail), 0.0, seed));
    rep.add(row("bond_probability", tilde_fail == 0, pairs, static_cast<double>(tilde_fail), 0.0, seed,
                "utilde <= min(u, 1)"));
    const double limit = 1.0 / (model.z * model.xi);
    rep.add(row("activity_bound", dec.constants().c_xi < limit, 1, dec.constants().c_xi, limit, seed,
                "c_xi < 1/(z xi) for " + model.name));
    rep.seconds = seconds_since(t0);
    return rep;
}

std::size_t hard_core_violations(const PottsPotential& pot, const Configuration& config)
{
    std::size_t bad = 0;
    const double core = pot.max_hard_core();
    if (core <= 0.0) return 0;
    for (const auto& [i, j] : pairs_within(config, pot.norm(), core, std::nullopt))
        bad += pot(config.at(i), config.at(j)).is_infinite();
    return bad;
}

SuiteReport check_zero_potential(const Model& model, double window, std::size_t samples, std::size_t thinning,
                                 std::uint64_t seed)
{
    const auto t0 = Clock::now();
    for (std::uint32_t a = 0; a < model.pot.spin_count(); ++a)
        for (std::uint32_t b = 0; b < model.pot.spin_count(); ++b) {
            const auto& fn = model.pot.fn(Spin{a}, Spin{b});
            if (fn.hard_core_radius() > 0.0 || !fn.is_zero_beyond_core())
                throw ParameterError("zero-potential check needs U = 0");
        }
    SuiteReport rep;
    rep.suite = "zero-potential";
    rep.seed = seed;
    RandomStream rng(seed, "zero-potential");
    GibbsChain chain(model.gibbs(window));
    for (std::size_t s = 0; s < model.sampler.burn_in; ++s) chain.sweep(rng);
    std::vector<std::uint64_t> counts;
    counts.reserve(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t k = 0; k < thinning; ++k) chain.sweep(rng);
        counts.push_back(chain.interior().size());
    }
    const double mean = model.z * Window(window).area();
    const auto t = poisson_gof(counts, mean);
    double avg = 0.0;
    for (auto c : counts) avg += static_cast<double>(c);
    avg /= static_cast<double>(std::max<std::size_t>(samples, 1));
    rep.add(row("poisson_counts", t.p > 0.01, samples, t.p, 0.01, seed,
                "chi2 " + fmt(t.statistic) + " dof " + fmt(t.dof) + ", mean " + fmt(avg) + " vs " + fmt(mean)));
    rep.seconds = seconds_since(t0);
    return rep;
}

} // namespace cg
