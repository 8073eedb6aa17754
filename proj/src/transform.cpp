#include "cgibbs/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cg {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double solve_root()
{
    double lo = 1.0, hi = 2.0;
    for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (mid * std::log(mid) < 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// d|x|_max / dx0, with the smaller-magnitude subgradient on the diagonal.
double max_norm_d0(Vec2 x, bool& tie)
{
    const double a0 = std::abs(x.x0), a1 = std::abs(x.x1);
    if (a0 > a1) return x.x0 > 0 ? 1.0 : -1.0;
    if (a0 == a1 && a0 > 0.0) tie = true;
    return 0.0;
}

DistortionField::Value taper_value(const Particle& y, const TaperParams& p)
{
    DistortionField::Value v;
    const double s = max_abs(y.x);
    v.value = tau_Rn(s, p);
    const double slope = tau_Rn_d1(s, p);
    if (slope != 0.0) {
        bool tie = false;
        v.deriv = slope * max_norm_d0(y.x, tie);
        v.tie = tie;
    }
    return v;
}

double local_radius(const DecomposedPotential& dec)
{
    return dec.max_k2_radius() * dec.base().norm().max_norm_stretch();
}

void check_inputs(const Configuration& config, const BondSet& bonds, const TaperParams& p)
{
    p.validate();
    validate_bonds(bonds, config);
    if (config.window().r() < p.n) throw ParameterError("window must contain Lambda_n");
}

Configuration shifted(const Configuration& config, const std::vector<double>& t, int dir)
{
    std::vector<Particle> interior = config.interior();
    for (std::size_t i = 0; i < interior.size(); ++i) interior[i].x.x0 += dir * t[i];
    for (std::size_t i = config.interior_count(); i < config.size(); ++i)
        if (t[i] != 0.0) throw std::logic_error("boundary particle was translated");
    return Configuration(config.window(), std::move(interior), config.boundary());
}

std::vector<std::uint32_t> cluster_union(const ClusterPartition& part, const std::vector<std::uint32_t>& seeds)
{
    std::vector<std::uint32_t> labels;
    for (auto i : seeds) labels.push_back(part.label[i]);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    std::vector<std::uint32_t> out;
    for (auto l : labels) out.insert(out.end(), part.members[l].begin(), part.members[l].end());
    std::sort(out.begin(), out.end());
    return out;
}

TransformResult run_forward(const Configuration& config, const BondSet& bonds, TaperParams p,
                            const DecomposedPotential& dec, int dir, const char* kind)
{
    p.direction = dir;
    check_inputs(config, bonds, p);
    const std::size_t n = config.size();
    const auto part = clusters(config, bonds);
    const double radius = local_radius(dec);

    TransformResult out;
    out.kind = kind;
    out.direction = dir;
    out.t_map.assign(n, 0.0);

    std::vector<DistortionField::Value> cur(n);
    std::vector<bool> open(n, true);
    CellGrid open_grid(radius);
    for (std::size_t i = 0; i < n; ++i) {
        cur[i] = taper_value(config.at(i), p);
        open_grid.insert(static_cast<std::uint32_t>(i), config.at(i).x);
    }

    std::size_t remaining = n;
    for (std::size_t k = 0; remaining > 0; ++k) {
        double mn = inf;
        for (std::size_t i = 0; i < n; ++i)
            if (open[i]) mn = std::min(mn, cur[i].value);
        StepRecord rec;
        rec.tau = mn;
        for (std::size_t i = 0; i < n; ++i)
            if (open[i] && cur[i].value <= mn + DistortionField::tie_tolerance)
                rec.P.push_back(static_cast<std::uint32_t>(i));
        rec.C = cluster_union(part, rec.P);
        for (auto i : rec.P) {
            FactorRecord f{i, k, cur[i].deriv, std::abs(1.0 + dir * cur[i].deriv), cur[i].tie};
            out.density *= f.factor;
            if (f.tie) ++out.ties;
            out.factors.push_back(f);
        }
        bool global = false;
        for (auto i : rec.C) {
            out.t_map[i] = mn;
            open[i] = false;
            open_grid.erase(i, config.at(i).x);
            --remaining;
        }
        for (auto i : rec.C) {
            const Particle& src = config.at(i);
            const double h = std::abs(tau_Rn(max_abs(src.x) - p.c_K, p) - mn);
            if (h * p.c_f > 0.5) {
                global = true;
                ++out.global_sources;
                continue;
            }
            open_grid.for_each_near(src.x, radius, [&](std::uint32_t j) {
                const Branch b = m_aux(src, mn, config.at(j), p, dec);
                if (std::isfinite(b.value)) DistortionField::combine(cur[j], b.value, b.deriv);
            });
        }
        if (global)
            for (std::size_t j = 0; j < n; ++j)
                if (open[j]) DistortionField::combine(cur[j], mn, 0.0);
        out.partition.push_back(std::move(rec));
    }
    out.transformed = shifted(config, out.t_map, dir);
    out.transformed_bonds = bonds;
    return out;
}

} // namespace

double taper_root()
{
    static const double s = solve_root();
    return s;
}

double q_taper(double s)
{
    if (s <= 1.0) return 1.0;
    return 1.0 / std::max(1.0, s * std::log(s));
}

double Q_taper(double k)
{
    if (!(k > 0.0)) throw ParameterError("Q_taper needs k > 0");
    const double s = taper_root();
    if (k <= s) return k;
    return s + std::log(std::log(k)) - std::log(std::log(s));
}

double r_ratio(double s, double k)
{
    const double q = Q_taper(k);
    const double c = std::clamp(s, 0.0, k);
    return c > 0.0 ? (q - Q_taper(c)) / q : 1.0;
}

void TaperParams::validate() const
{
    if (!(tau >= 0.0 && tau <= 0.5)) throw ParameterError("tau must lie in [0, 1/2]");
    if (!(n > R && R >= nprime && nprime >= 1)) throw ParameterError("taper radii must satisfy n > R >= n' >= 1");
    if (!(delta > 0.0 && delta < 0.5)) throw ParameterError("delta must lie in (0, 1/2)");
    if (direction != 1 && direction != -1) throw ParameterError("direction must be +1 or -1");
    if (!(c_K >= 0.0) || !(c_f > 0.0)) throw ParameterError("c_K and c_f must come from a decomposition");
}

TaperParams make_taper(double tau, int R, int n, int nprime, double delta, const DecomposedPotential& dec,
                       int direction)
{
    TaperParams p{tau, R, n, nprime, delta, direction, dec.constants().c_K, dec.constants().c_f};
    p.validate();
    return p;
}

double tau_Rn(double s, const TaperParams& p)
{
    return p.tau * r_ratio(s - p.R, static_cast<double>(p.n - p.R));
}

double tau_Rn_d1(double s, const TaperParams& p)
{
    if (s <= p.R || s >= p.n) return 0.0;
    return -p.tau * q_taper(s - p.R) / Q_taper(static_cast<double>(p.n - p.R));
}

Branch m_aux(const Particle& source, double t, const Particle& y, const TaperParams& p,
             const DecomposedPotential& dec)
{
    const double h = std::abs(tau_Rn(max_abs(source.x) - p.c_K, p) - t);
    if (h * p.c_f > 0.5) return {t, 0.0};
    const double f = dec.fK(source, y);
    if (f >= 1.0) return {inf, 0.0};
    return {t + h * f, h * dec.fK_e_d1(source, y)};
}

DistortionField::DistortionField(const TaperParams& p, const DecomposedPotential& dec)
    : p_(p), dec_(dec), grid_(local_radius(dec))
{
}

bool DistortionField::add(const Particle& source, double t, std::size_t step)
{
    const double h = std::abs(tau_Rn(max_abs(source.x) - p_.c_K, p_) - t);
    if (h * p_.c_f > 0.5) {
        global_.push_back({source, t, step});
        return true;
    }
    grid_.insert(static_cast<std::uint32_t>(local_.size()), source.x);
    local_.push_back({source, t, step});
    return false;
}

void DistortionField::combine(Value& cur, double v, double d)
{
    if (v < cur.value - tie_tolerance) {
        cur = {v, d, false};
        return;
    }
    if (v > cur.value + tie_tolerance) return;
    if (std::abs(d - cur.deriv) > tie_tolerance) {
        cur.tie = true;
        if (std::abs(d) < std::abs(cur.deriv)) cur.deriv = d;
    }
    cur.value = std::min(cur.value, v);
}

DistortionField::Value DistortionField::eval(const Particle& y, std::size_t before_step) const
{
    Value v = taper_value(y, p_);
    for (const auto& g : global_)
        if (g.step < before_step) combine(v, g.t, 0.0);
    grid_.for_each_near(y.x, local_radius(dec_), [&](std::uint32_t id) {
        const Source& s = local_[id];
        if (s.step >= before_step) return;
        const Branch b = m_aux(s.y, s.t, y, p_, dec_);
        if (std::isfinite(b.value)) combine(v, b.value, b.deriv);
    });
    return v;
}

TransformResult forward_transform(const Configuration& config, const BondSet& bonds, const TaperParams& p,
                                  const DecomposedPotential& dec)
{
    return run_forward(config, bonds, p, dec, 1, "forward");
}

TransformResult backward_transform(const Configuration& config, const BondSet& bonds, const TaperParams& p,
                                   const DecomposedPotential& dec)
{
    return run_forward(config, bonds, p, dec, -1, "backward");
}

namespace {

struct Preimage {
    double x0 = 0.0;
    DistortionField::Value t;
};

// Solves x0 + dir * t(x0, y1) = target by bisection then safeguarded Newton.
Preimage invert_along_e(const DistortionField& field, const Particle& target, int dir, double tau)
{
    Particle probe = target;
    auto g = [&](double x0, DistortionField::Value& t) {
        probe.x.x0 = x0;
        t = field.eval(probe);
        return x0 + dir * t.value - target.x.x0;
    };
    double lo = target.x.x0 - tau - 1.0, hi = target.x.x0 + tau + 1.0;
    DistortionField::Value t;
    if (!(g(lo, t) < 0.0) || !(g(hi, t) > 0.0)) throw std::logic_error("inverse root finder failed to bracket");
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        (g(mid, t) < 0.0 ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
        const double gx = g(x, t);
        if (gx == 0.0) break;
        (gx < 0.0 ? lo : hi) = x;
        const double slope = 1.0 + dir * t.deriv;
        double next = slope > 0.0 ? x - gx / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == x || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x))) break;
        x = next;
    }
    g(x, t);
    return {x, t};
}

} // namespace

TransformResult inverse_transform(const Configuration& config, const BondSet& bonds, const TaperParams& p_in,
                                  const DecomposedPotential& dec)
{
    check_inputs(config, bonds, p_in);
    const TaperParams p = p_in;
    const int dir = p.direction;
    const std::size_t n = config.size();
    const auto part = clusters(config, bonds);
    const double reach = local_radius(dec) + p.tau + 1e-9;

    TransformResult out;
    out.kind = "inverse";
    out.direction = dir;
    out.t_map.assign(n, 0.0);

    DistortionField field(p, dec);
    std::vector<Preimage> pre(n);
    std::vector<bool> open(n, true);
    CellGrid open_grid(reach);
    for (std::size_t i = 0; i < n; ++i) {
        pre[i] = invert_along_e(field, config.at(i), dir, p.tau);
        open_grid.insert(static_cast<std::uint32_t>(i), config.at(i).x);
    }

    std::size_t remaining = n;
    for (std::size_t k = 0; remaining > 0; ++k) {
        double mn = inf;
        for (std::size_t i = 0; i < n; ++i)
            if (open[i]) mn = std::min(mn, pre[i].t.value);
        StepRecord rec;
        rec.tau = mn;
        for (std::size_t i = 0; i < n; ++i)
            if (open[i] && pre[i].t.value <= mn + DistortionField::tie_tolerance)
                rec.P.push_back(static_cast<std::uint32_t>(i));
        rec.C = cluster_union(part, rec.P);
        for (auto i : rec.P) {
            FactorRecord f{i, k, pre[i].t.deriv, std::abs(1.0 + dir * pre[i].t.deriv), pre[i].t.tie};
            out.density *= f.factor;
            if (f.tie) ++out.ties;
            out.factors.push_back(f);
        }
        bool global = false;
        std::vector<Particle> sources;
        for (auto i : rec.C) {
            out.t_map[i] = mn;
            open[i] = false;
            open_grid.erase(i, config.at(i).x);
            --remaining;
            Particle src = config.at(i);
            src.x.x0 -= dir * mn;
            if (field.add(src, mn, k)) {
                global = true;
                ++out.global_sources;
            }
            sources.push_back(src);
        }
        auto refresh = [&](std::uint32_t j) { pre[j] = invert_along_e(field, config.at(j), dir, p.tau); };
        if (global) {
            for (std::size_t j = 0; j < n; ++j)
                if (open[j]) refresh(static_cast<std::uint32_t>(j));
        } else {
            std::vector<std::uint32_t> touched;
            for (const auto& src : sources) open_grid.for_each_near(src.x, reach, [&](std::uint32_t j) {
                touched.push_back(j);
            });
            std::sort(touched.begin(), touched.end());
            touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
            for (auto j : touched) refresh(j);
        }
        out.partition.push_back(std::move(rec));
    }
    out.transformed = shifted(config, out.t_map, -dir);
    out.transformed_bonds = bonds;
    return out;
}

double density(const TransformResult& result)
{
    double d = 1.0;
    for (const auto& f : result.factors) d *= f.factor;
    return d;
}

StepFunctions::StepFunctions(const Configuration& config, const TransformResult& result, const TaperParams& p,
                             const DecomposedPotential& dec)
    : field_(p, dec), steps_(result.partition.size())
{
    for (std::size_t k = 0; k < result.partition.size(); ++k)
        for (auto i : result.partition[k].C) field_.add(config.at(i), result.partition[k].tau, k);
}

double tau_q(const Particle& y, const Particle& yp, const TaperParams& p)
{
    const double a = max_abs(y.x), b = max_abs(yp.x);
    if (a > b) return 0.0;
    const double d = tau_Rn(a - p.c_K, p) - tau_Rn(b, p);
    return d * d;
}

GoodConfigReport good_config_report(const Configuration& config, const BondSet& bonds, const TaperParams& p,
                                    const DecomposedPotential& dec)
{
    p.validate();
    GoodConfigReport rep;
    const std::size_t n = config.size();
    const BondSet plus = augment_bplus(config, bonds, dec);
    rep.cluster_range = cluster_range(config, plus, Window(p.nprime));
    const auto part = clusters(config, plus);
    const Norm& norm = dec.base().norm();

    // S[y] = sum over y'' connected to y (y included) of tau_q(y, y'').
    std::vector<double> S(n, 0.0);
    for (const auto& members : part.members)
        for (auto a : members)
            for (auto b : members) S[a] += tau_q(config.at(a), config.at(b), p);

    const double cf2 = p.c_f * p.c_f;
    for (std::size_t i = 0; i < n; ++i) rep.sigma[0] += S[i];
    rep.sigma[0] *= 4.0 * cf2;

    const Window inner(p.n);
    const double Qn = Q_taper(static_cast<double>(p.n - p.R));
    for (std::size_t i = 0; i < n; ++i) {
        const Particle& y = config.at(i);
        if (!inner.contains(y.x)) continue;
        const double q = q_taper(max_abs(y.x) - p.R);
        rep.sigma[1] += q * q;
    }
    rep.sigma[1] *= 2.0 * p.tau * p.tau / (Qn * Qn);

    // K''-degree with the diagonal counted.
    std::vector<double> deg(n, 1.0);
    for (const auto& [a, b] : pairs_within(config, norm, dec.max_k2_radius(), std::nullopt)) {
        if (norm(config.at(a).x - config.at(b).x) > dec.k2_radius(config.at(a).spin, config.at(b).spin)) continue;
        deg[a] += 1.0;
        deg[b] += 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) rep.sigma[2] += deg[i] * S[i];
    rep.sigma[2] *= 2.0 * cf2;

    const double level = dec.constants().psi_level;
    if (level > 0.0) {
        std::vector<double> Psi(n, level);
        for (const auto& [a, b] : pairs_within(config, norm, dec.constants().psi_range, std::nullopt)) {
            const double w = dec.psi(config.at(a), config.at(b));
            Psi[a] += w;
            Psi[b] += w;
            rep.sigma[3] += w * (tau_q(config.at(a), config.at(b), p) + tau_q(config.at(b), config.at(a), p));
        }
        rep.sigma[3] *= 3.0;
        for (std::size_t i = 0; i < n; ++i) rep.sigma[4] += Psi[i] * S[i];
        rep.sigma[4] *= 6.0;
    }
    rep.is_good = rep.cluster_range < p.R && rep.sigma_total() < p.delta;
    return rep;
}

} // namespace cg
