#include "cgibbs/potentials.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace cg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
double gauss30(F&& f, double a, double b)
{
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    return boost::math::quadrature::gauss<double, 30>::integrate(f, a, m) +
           boost::math::quadrature::gauss<double, 30>::integrate(f, m, b);
}

} // namespace

std::pair<double, double> Cubic::range_on(double len) const
{
    double lo = std::min((*this)(0.0), (*this)(len));
    double hi = std::max((*this)(0.0), (*this)(len));
    // Critical points of the cubic: roots of c1 + 2 c2 t + 3 c3 t^2.
    const double a = 3.0 * c[3], b = 2.0 * c[2], cc = c[1];
    std::vector<double> roots;
    if (a == 0.0) {
        if (b != 0.0) roots.push_back(-cc / b);
    } else {
        const double disc = b * b - 4.0 * a * cc;
        if (disc >= 0.0) {
            const double s = std::sqrt(disc);
            roots.push_back((-b - s) / (2.0 * a));
            roots.push_back((-b + s) / (2.0 * a));
        }
    }
    for (double t : roots)
        if (t > 0.0 && t < len) {
            lo = std::min(lo, (*this)(t));
            hi = std::max(hi, (*this)(t));
        }
    return {lo, hi};
}

double Cubic::max_slope_on(double len) const
{
    double m = std::max(std::abs(d1(0.0)), std::abs(d1(len)));
    if (c[3] != 0.0) {
        const double t = -c[2] / (3.0 * c[3]);
        if (t > 0.0 && t < len) m = std::max(m, std::abs(d1(t)));
    }
    return m;
}

WellBehavedFn::WellBehavedFn(std::vector<double> breakpoints, std::vector<Cubic> pieces,
                             std::vector<double> point_values)
    : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)), point_values_(std::move(point_values))
{
    if (breakpoints_.empty()) throw ParameterError("well-behaved function needs at least the hard-core radius");
    if (!(breakpoints_.front() >= 0.0)) throw ParameterError("hard-core radius must be nonnegative");
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
        if (!std::isfinite(breakpoints_[i])) throw ParameterError("breakpoints must be finite");
        if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1]))
            throw ParameterError("breakpoints must be strictly increasing");
    }
    const std::size_t n = breakpoints_.size() - 1;
    if (pieces_.size() != n) throw ParameterError("need one polynomial piece per interval between breakpoints");
    if (point_values_.size() != n) throw ParameterError("need one point value per breakpoint after the first");
    for (std::size_t i = 0; i < n; ++i) {
        for (double c : pieces_[i].c)
            if (!std::isfinite(c)) throw ParameterError("polynomial coefficients must be finite");
        const auto [lo, hi] = pieces_[i].range_on(breakpoints_[i + 1] - breakpoints_[i]);
        (void)hi;
        if (lo < -1e-12) throw ParameterError("potential must be nonnegative");
        if (!std::isfinite(point_values_[i]) || point_values_[i] < 0.0)
            throw ParameterError("point values must be finite and nonnegative");
    }
}

WellBehavedFn WellBehavedFn::hard_core(double r0) { return WellBehavedFn({r0}, {}, {}); }

WellBehavedFn WellBehavedFn::step(double r0, double r1, double height, double value_at_r1)
{
    return WellBehavedFn({r0, r1}, {Cubic{{height, 0.0, 0.0, 0.0}}}, {value_at_r1});
}

ExtReal WellBehavedFn::operator()(double r) const
{
    if (r <= breakpoints_.front()) return ExtReal::infinity();
    return finite_value(r);
}

double WellBehavedFn::finite_value(double r) const
{
    if (r > breakpoints_.back()) return 0.0;
    const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), r);
    const auto i = static_cast<std::size_t>(it - breakpoints_.begin());
    if (*it == r) return i == 0 ? kInf : point_values_[i - 1];
    return pieces_[i - 1](r - breakpoints_[i - 1]);
}

double WellBehavedFn::left_limit(std::size_t i) const
{
    return pieces_.at(i - 1)(breakpoints_.at(i) - breakpoints_.at(i - 1));
}

double WellBehavedFn::right_limit(std::size_t i) const { return i < pieces_.size() ? pieces_[i](0.0) : 0.0; }

bool WellBehavedFn::is_zero_beyond_core() const { return pieces_.empty(); }

HatSplit::HatSplit(const WellBehavedFn& fn, double eps) : fn_(fn), eps_(eps)
{
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ParameterError("eps must be positive");
    for (std::size_t i = 1; i <= fn_.jump_count(); ++i)
        peaks_.push_back(std::max({fn_.point_values()[i - 1], fn_.left_limit(i), fn_.right_limit(i)}) + 1.0);
}

double HatSplit::hat(std::size_t i, double r) const
{
    const double m = peaks_.at(i - 1);
    return m - (m / eps_) * std::abs(r - fn_.breakpoints()[i]);
}

double HatSplit::continuous(double r) const
{
    double v = fn_.finite_value(r);
    const auto& b = fn_.breakpoints();
    for (std::size_t i = 1; i < b.size(); ++i)
        if (std::abs(r - b[i]) < eps_) v = std::max(v, hat(i, r));
    return v;
}

double HatSplit::small(double r) const
{
    if (r <= fn_.hard_core_radius()) return 0.0;
    return continuous(r) - fn_.finite_value(r);
}

double HatSplit::continuous_at_core() const
{
    const double r0 = fn_.hard_core_radius();
    double v = fn_.jump_count() > 0 ? fn_.pieces()[0](0.0) : 0.0;
    for (std::size_t i = 1; i <= fn_.jump_count(); ++i) v = std::max(v, hat(i, r0));
    return v;
}

double HatSplit::lipschitz() const
{
    double l = 0.0;
    for (double m : peaks_) l = std::max(l, m / eps_);
    const auto& b = fn_.breakpoints();
    for (std::size_t i = 0; i < fn_.jump_count(); ++i)
        l = std::max(l, fn_.pieces()[i].max_slope_on(b[i + 1] - b[i]));
    return l;
}

std::vector<double> HatSplit::kinks() const
{
    const auto& b = fn_.breakpoints();
    const double r0 = b.front();
    std::vector<double> pts;
    for (std::size_t i = 1; i < b.size(); ++i) {
        pts.push_back(b[i]);
        if (b[i] - eps_ > r0) pts.push_back(b[i] - eps_);
        pts.push_back(b[i] + eps_);
    }
    std::sort(pts.begin(), pts.end());
    if (pts.empty()) return pts;

    // The branch attaining the max: -1 for the function itself, i for hat i.
    auto active = [&](double r) {
        int best = -1;
        double v = fn_.finite_value(r);
        for (std::size_t i = 1; i < b.size(); ++i)
            if (std::abs(r - b[i]) < eps_ && hat(i, r) > v) {
                v = hat(i, r);
                best = static_cast<int>(i);
            }
        return best;
    };
    std::vector<double> out = pts;
    std::vector<double> seg = {r0};
    seg.insert(seg.end(), pts.begin(), pts.end());
    constexpr int samples = 256;
    for (std::size_t s = 0; s + 1 < seg.size(); ++s) {
        const double a = seg[s], z = seg[s + 1];
        if (!(z > a)) continue;
        const double step = (z - a) / samples;
        double prev_r = a + 0.5 * step;
        int prev = active(prev_r);
        for (int k = 1; k < samples; ++k) {
            const double r = a + (k + 0.5) * step;
            const int cur = active(r);
            if (cur != prev) {
                double lo = prev_r, hi = r;
                for (int it = 0; it < 80; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (active(mid) == prev ? lo : hi) = mid;
                }
                out.push_back(0.5 * (lo + hi));
            }
            prev = cur;
            prev_r = r;
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

HatSplit decompose_well_behaved(const WellBehavedFn& fn, double eps) { return HatSplit(fn, eps); }

PottsPotential::PottsPotential(Norm norm, std::uint32_t spin_count, std::vector<WellBehavedFn> table, double eps)
    : norm_(norm), spin_count_(spin_count), table_(std::move(table)), eps_(eps), range_(0.0)
{
    if (spin_count_ < 1) throw ParameterError("spin space must be nonempty");
    if (table_.size() != static_cast<std::size_t>(spin_count_) * spin_count_)
        throw ParameterError("potential table must have |S|^2 entries");
    for (std::uint32_t a = 0; a < spin_count_; ++a)
        for (std::uint32_t b = 0; b < spin_count_; ++b)
            if (!(fn(Spin{a}, Spin{b}) == fn(Spin{b}, Spin{a})))
                throw ParameterError("potential table must be symmetric");
    for (const auto& f : table_) range_ = std::max(range_, f.outer());
    if (eps_ <= 0.0) {
        const double r = min_positive_hard_core();
        if (!(r > 0.0)) throw ParameterError("eps must be given when no hard-core radius is positive");
        eps_ = 0.05 * r;
    }
    if (!std::isfinite(eps_)) throw ParameterError("eps must be finite");
}

double PottsPotential::min_positive_hard_core() const
{
    double m = kInf;
    for (const auto& f : table_)
        if (f.hard_core_radius() > 0.0) m = std::min(m, f.hard_core_radius());
    return std::isinf(m) ? 0.0 : m;
}

double PottsPotential::max_hard_core() const
{
    double m = 0.0;
    for (const auto& f : table_) m = std::max(m, f.hard_core_radius());
    return m;
}

void PottsPotential::check_spin(Spin s) const
{
    if (s.id >= spin_count_) throw ParameterError("spin index out of range");
}

ExtReal PottsPotential::operator()(const Particle& a, const Particle& b) const
{
    return fn(a.spin, b.spin)(norm_(a.x - b.x));
}

std::string to_string(PairRegion r)
{
    switch (r) {
    case PairRegion::hard_core: return "K^U";
    case PairRegion::k_minus_hard_core: return "K\\K^U";
    case PairRegion::k1_minus_k: return "K'\\K";
    case PairRegion::k2_minus_k1: return "K''\\K'";
    case PairRegion::outside: return "outside";
    }
    return "";
}

PairRegion pair_region(const PottsPotential& pot, const Particle& y1, const Particle& y2)
{
    const double d = pot.norm()(y1.x - y2.x);
    const double r = pot.hard_core(y1.spin, y2.spin);
    if (d <= r) return PairRegion::hard_core;
    if (d <= r + pot.eps()) return PairRegion::k1_minus_k;
    if (d <= r + 2.0 * pot.eps()) return PairRegion::k2_minus_k1;
    return PairRegion::outside;
}

Mollifier::Mollifier(double width) : width_(width)
{
    if (!(width > 0.0) || !std::isfinite(width)) throw ParameterError("mollifier width must be positive");
    auto bump = [](double u) { return std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0; };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double mass = GK::integrate(bump, -1.0, 1.0, 15, 1e-15);
    const double first = GK::integrate([&](double u) { return u * bump(u); }, 0.0, 1.0, 15, 1e-15);
    norm_ = 1.0 / (mass * width_);
    mean_abs_ = 2.0 * first / mass * width_;
}

double Mollifier::operator()(double t) const
{
    const double u = t / width_;
    if (std::abs(u) >= 1.0) return 0.0;
    return norm_ * std::exp(-1.0 / (1.0 - u * u));
}

double Mollifier::d1(double t) const
{
    const double u = t / width_;
    if (std::abs(u) >= 1.0) return 0.0;
    const double w = 1.0 - u * u;
    return (*this)(t) * (-2.0 * t / (width_ * width_ * w * w));
}

double Mollifier::d2(double t) const
{
    const double u = t / width_;
    if (std::abs(u) >= 1.0) return 0.0;
    const double w = 1.0 - u * u;
    const double d2w = width_ * width_;
    const double a = -2.0 * t / (d2w * w * w);
    const double da = -2.0 / (d2w * w * w) - 8.0 * t * t / (d2w * d2w * w * w * w);
    return (*this)(t) * (a * a + da);
}

SmoothRadial::SmoothRadial(const HatSplit& split, double mollify_width)
{
    const auto& fn = split.fn();
    if (fn.is_zero_beyond_core()) return;
    const Mollifier kernel(mollify_width);
    const double dw = mollify_width;
    const double eps = split.eps();
    const double r0 = fn.hard_core_radius();
    const auto& b = fn.breakpoints();
    const bool reflect = r0 == 0.0;

    // Where the majorant may be concave, the mollified function can dip below it; lift there.
    std::vector<std::pair<double, double>> concave;
    for (std::size_t i = 1; i < b.size(); ++i) concave.emplace_back(b[i] - 2 * dw, b[i] + 2 * dw);
    for (std::size_t i = 0; i < fn.jump_count(); ++i)
        if (!fn.pieces()[i].is_affine()) concave.emplace_back(b[i] - 2 * dw, b[i + 1] + 2 * dw);
    if (!(fn.pieces()[0].is_constant() && b[1] - eps > r0 + 2 * dw)) concave.emplace_back(r0 - 2 * dw, r0 + 2 * dw);
    std::sort(concave.begin(), concave.end());
    std::vector<std::pair<double, double>> chi;
    for (auto iv : concave) {
        if (reflect) iv.first = std::max(iv.first, 0.0);
        if (!chi.empty() && iv.first <= chi.back().second)
            chi.back().second = std::max(chi.back().second, iv.second);
        else
            chi.push_back(iv);
    }

    const double core_value = split.continuous_at_core();
    auto base = [&](double s) {
        if (reflect) s = std::abs(s);
        if (s <= r0) return core_value;
        return split.continuous(s);
    };
    auto in_chi = [&](double s) {
        if (reflect) s = std::abs(s);
        for (const auto& [lo, hi] : chi)
            if (s >= lo && s <= hi) return true;
        return false;
    };

    std::vector<double> kinks = split.kinks();
    kinks.push_back(r0);
    for (const auto& [lo, hi] : chi) {
        kinks.push_back(lo);
        kinks.push_back(hi);
    }
    if (reflect) {
        const auto n = kinks.size();
        for (std::size_t i = 0; i < n; ++i) kinks.push_back(-kinks[i]);
    }
    std::sort(kinks.begin(), kinks.end());
    kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());

    double support = b.back() + eps;
    for (const auto& iv : chi) support = std::max(support, iv.second);
    h_ = dw / 8.0;
    const auto nodes = static_cast<std::size_t>(std::ceil((support + dw) / h_)) + 1;
    range_ = static_cast<double>(nodes - 1) * h_;

    double lift = split.lipschitz() * kernel.mean_abs() + 1e-9;
    for (int attempt = 0; attempt < 24; ++attempt, lift *= 2.0) {
        auto g = [&](double s) { return base(s) + (in_chi(s) ? lift : 0.0); };
        std::vector<std::array<double, 3>> node(nodes, {0.0, 0.0, 0.0});
        for (std::size_t j = 0; j + 1 < nodes; ++j) {
            const double r = static_cast<double>(j) * h_;
            std::vector<double> cuts = {r - dw};
            for (double k : kinks)
                if (k > r - dw && k < r + dw) cuts.push_back(k);
            cuts.push_back(r + dw);
            // Normalized by the quadrature's kernel mass and centred on the mean: constants are reproduced exactly.
            double mass = 0.0;
            for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
                mass += gauss30([&](double s) { return kernel(r - s); }, cuts[c], cuts[c + 1]);
                node[j][0] += gauss30([&](double s) { return kernel(r - s) * g(s); }, cuts[c], cuts[c + 1]);
            }
            node[j][0] /= mass;
            const double mean = node[j][0];
            for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
                node[j][1] += gauss30([&](double s) { return kernel.d1(r - s) * (g(s) - mean); }, cuts[c], cuts[c + 1]);
                node[j][2] += gauss30([&](double s) { return kernel.d2(r - s) * (g(s) - mean); }, cuts[c], cuts[c + 1]);
            }
        }
        cells_.clear();
        for (std::size_t j = 0; j + 1 < nodes; ++j) {
            const double p0 = node[j][0], p1 = node[j + 1][0];
            const double v0 = h_ * node[j][1], v1 = h_ * node[j + 1][1];
            const double a0 = h_ * h_ * node[j][2], a1 = h_ * h_ * node[j + 1][2];
            Cell cell;
            cell.c = {p0,
                      v0,
                      0.5 * a0,
                      10.0 * (p1 - p0) - 6.0 * v0 - 4.0 * v1 - 0.5 * (3.0 * a0 - a1),
                      -15.0 * (p1 - p0) + 8.0 * v0 + 7.0 * v1 + 0.5 * (3.0 * a0 - 2.0 * a1),
                      6.0 * (p1 - p0) - 3.0 * (v0 + v1) - 0.5 * (a0 - a1)};
            cells_.push_back(cell);
        }
        lift_ = chi.empty() ? 0.0 : lift;
        double worst = 0.0;
        const double fine = h_ / 16.0;
        for (double r = r0 + fine; r <= range_ + fine; r += fine) worst = std::min(worst, value(r) - fn.finite_value(r));
        for (double r : b)
            if (r > r0) worst = std::min(worst, value(r) - fn.finite_value(r));
        if (worst >= -1e-10) return;
        if (chi.empty()) break;
    }
    throw std::logic_error("smooth part could not be lifted above the potential");
}

void SmoothRadial::eval(double r, double& v, double& dv, double& ddv) const
{
    v = dv = ddv = 0.0;
    if (cells_.empty() || r >= range_ || r < 0.0) return;
    auto j = static_cast<std::size_t>(r / h_);
    if (j >= cells_.size()) j = cells_.size() - 1;
    const double t = r / h_ - static_cast<double>(j);
    const auto& c = cells_[j].c;
    v = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
    dv = (c[1] + t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5])))) / h_;
    ddv = (2 * c[2] + t * (6 * c[3] + t * (12 * c[4] + t * 20 * c[5]))) / (h_ * h_);
}

double SmoothRadial::value(double r) const
{
    double v, dv, ddv;
    eval(r, v, dv, ddv);
    return v;
}

double SmoothRadial::d1(double r) const
{
    double v, dv, ddv;
    eval(r, v, dv, ddv);
    return dv;
}

double SmoothRadial::d2(double r) const
{
    double v, dv, ddv;
    eval(r, v, dv, ddv);
    return ddv;
}

double smoothstep(double s)
{
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s * s * (3.0 - 2.0 * s);
}

double smoothstep_d1(double s)
{
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return 6.0 * s * (1.0 - s);
}

namespace {

// Integral over the unit ball of |.|_h of w(|x|_max), midpoint rule.
template <class W>
double unit_ball_integral(const Norm& norm, W&& w)
{
    const double s = norm.max_norm_stretch();
    constexpr int n = 1200;
    const double h = 2.0 * s / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec2 x{-s + (i + 0.5) * h, -s + (j + 0.5) * h};
            if (norm(x) <= 1.0) acc += w(max_abs(x));
        }
    return acc * h * h;
}

// Simpson rule on [a, b] with an even number of panels.
template <class F>
double simpson(F&& f, double a, double b, double step)
{
    if (!(b > a)) return 0.0;
    auto n = static_cast<std::size_t>(std::ceil((b - a) / step));
    if (n % 2) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double acc = f(a) + f(b);
    for (std::size_t i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + static_cast<double>(i) * h);
    return acc * h / 3.0;
}

} // namespace

DecomposedPotential::DecomposedPotential(PottsPotential base, double mollify_width, double z, double xi)
    : base_(std::move(base)), mollify_width_(mollify_width), z_(z), xi_(xi)
{
    if (mollify_width_ <= 0.0) mollify_width_ = base_.eps() / 4.0;
    if (!(z_ > 0.0) || !std::isfinite(z_)) throw ParameterError("activity z must be positive");
    if (!(xi_ >= 1.0) || !std::isfinite(xi_)) throw ParameterError("Ruelle bound xi must be at least 1");
    const auto S = base_.spin_count();
    const Norm& norm = base_.norm();
    splits_.reserve(S * S);
    smooth_.resize(S * S);
    for (std::uint32_t a = 0; a < S; ++a)
        for (std::uint32_t b = 0; b < S; ++b) splits_.emplace_back(base_.fn(Spin{a}, Spin{b}), base_.eps());
    for (std::uint32_t a = 0; a < S; ++a)
        for (std::uint32_t b = a; b < S; ++b) {
            smooth_[a * S + b] = SmoothRadial(splits_[a * S + b], mollify_width_);
            smooth_[b * S + a] = smooth_[a * S + b];
        }
    for (const auto& s : smooth_) smooth_range_ = std::max(smooth_range_, s.range());
    if (norm.kind() == NormKind::max && smooth_range_ > 0.0)
        throw ParameterError("max norm is not smooth along e; use a jump-free potential or a smooth norm");
    small_support_ = smooth_range_;

    auto& k = constants_;
    k.c_K = max_k2_radius() * norm.max_norm_stretch();
    k.c_f = 0.75 * norm.e_length() / base_.eps();
    k.psi_range = smooth_range_ + std::max(1.0, norm.e_length());
    double second = 0.0;
    for (std::uint32_t a = 0; a < S; ++a)
        for (std::uint32_t b = 0; b < S; ++b) {
            const auto& sr = smooth_[a * S + b];
            if (sr.is_zero()) continue;
            const double r0 = base_.hard_core(Spin{a}, Spin{b});
            const double step = mollify_width_ / 64.0;
            for (double r = std::max(r0, 0.0) + 0.5 * step; r < sr.range(); r += step) {
                const double bound = norm.e_length() * norm.e_length() * std::abs(sr.d2(r)) +
                                     norm.curvature_bound() * std::abs(sr.d1(r)) / r;
                second = std::max(second, bound);
            }
        }
    k.psi_level = 1.1 * second;
    if (k.psi_level > 0.0) {
        const double rho = k.psi_range;
        const double inner = unit_ball_integral(norm, [&](double m) { return std::max(rho * rho * m * m, 1.0); });
        k.c_psi = std::max(k.psi_level, k.psi_level * rho * rho * inner);
    }

    const double area = norm.unit_ball_area();
    const double j2 = unit_ball_integral(norm, [](double m) { return m * m; });
    for (std::uint32_t a = 0; a < S; ++a) {
        double xi_sum = 0.0, u_sum = 0.0;
        for (std::uint32_t b = 0; b < S; ++b) {
            xi_sum += annulus_area(Spin{a}, Spin{b});
            const double r0 = base_.hard_core(Spin{a}, Spin{b});
            const double hi = smooth_[a * S + b].range();
            if (hi > r0) {
                auto ut = [&](double rho) { return rho <= r0 ? 0.0 : 1.0 - std::exp(-small_at(Spin{a}, Spin{b}, rho)); };
                const double step = mollify_width_ / 32.0;
                xi_sum += 2.0 * area * simpson([&](double rho) { return ut(rho) * rho; }, r0, hi, step);
                u_sum += 4.0 * j2 * simpson([&](double rho) { return ut(rho) * rho * rho * rho; }, r0, hi, step);
            }
        }
        k.c_xi = std::max(k.c_xi, xi_sum / S);
        k.c_u = std::max(k.c_u, u_sum / S);
    }
}

double DecomposedPotential::max_k2_radius() const
{
    return base_.max_hard_core() + 2.0 * base_.eps();
}

double DecomposedPotential::annulus_area(Spin a, Spin b) const
{
    const double r = base_.hard_core(a, b);
    const double r2 = r + 2.0 * base_.eps();
    return base_.norm().unit_ball_area() * (r2 * r2 - r * r);
}

double DecomposedPotential::smooth(const Particle& a, const Particle& b) const
{
    return smooth_radial(a.spin, b.spin).value(base_.norm()(a.x - b.x));
}

double DecomposedPotential::small_at(Spin a, Spin b, double d) const
{
    const auto& fn = base_.fn(a, b);
    if (d <= fn.hard_core_radius()) return 0.0;
    const double diff = smooth_radial(a, b).value(d) - fn.finite_value(d);
    // Rounding-level negatives are clamped; the build verifies the true minimum.
    return diff > 0.0 ? diff : 0.0;
}

double DecomposedPotential::small(const Particle& a, const Particle& b) const
{
    return small_at(a.spin, b.spin, base_.norm()(a.x - b.x));
}

double DecomposedPotential::utilde(const Particle& a, const Particle& b) const
{
    return -std::expm1(-small(a, b));
}

double DecomposedPotential::psi(const Particle& a, const Particle& b) const
{
    return base_.norm()(a.x - b.x) <= constants_.psi_range ? constants_.psi_level : 0.0;
}

double DecomposedPotential::smooth_e_d1(const Particle& a, const Particle& b) const
{
    const Vec2 v = b.x - a.x;
    return smooth_radial(a.spin, b.spin).d1(base_.norm()(v)) * base_.norm().d0(v);
}

double DecomposedPotential::smooth_e_d2(const Particle& a, const Particle& b) const
{
    const Vec2 v = b.x - a.x;
    const auto& sr = smooth_radial(a.spin, b.spin);
    const double d = base_.norm()(v);
    const double g = base_.norm().d0(v);
    return sr.d2(d) * g * g + sr.d1(d) * base_.norm().d00(v);
}

double DecomposedPotential::fK(const Particle& a, const Particle& b) const
{
    const double d = base_.norm()(a.x - b.x);
    const double r = base_.hard_core(a.spin, b.spin);
    return smoothstep((d - r) / (2.0 * base_.eps()));
}

double DecomposedPotential::fK_e_d1(const Particle& a, const Particle& b) const
{
    const Vec2 v = b.x - a.x;
    const double d = base_.norm()(v);
    const double r = base_.hard_core(a.spin, b.spin);
    const double w = 2.0 * base_.eps();
    return smoothstep_d1((d - r) / w) / w * base_.norm().d0(v);
}

DecomposedPotential build_decomposition(const PottsPotential& pot, const DecompositionOptions& opts)
{
    DecomposedPotential dec(pot, opts.mollify_width, opts.z, opts.xi);
    if (!(dec.constants().c_xi < 1.0 / (opts.z * opts.xi)))
        throw ParameterError("activity too large for decomposition");
    return dec;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_within(const Configuration& config, const Norm& norm,
                                                                  double cutoff,
                                                                  const std::optional<Window>& region)
{
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    const auto n = static_cast<std::uint32_t>(config.size());
    const double reach = cutoff * norm.max_norm_stretch();
    CellGrid grid(reach > 0.0 ? reach : 1.0);
    for (std::uint32_t i = 0; i < n; ++i) grid.insert(i, config.at(i).x);
    for (std::uint32_t i = 0; i < n; ++i) {
        const Particle& p = config.at(i);
        const bool pin = !region || region->contains(p.x);
        grid.for_each_near(p.x, reach, [&](std::uint32_t j) {
            if (j <= i) return;
            const Particle& q = config.at(j);
            if (!pin && !region->contains(q.x)) return;
            if (norm(p.x - q.x) <= cutoff) out.emplace_back(i, j);
        });
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

template <class F>
auto bruteforce_sum(const Configuration& config, const Window& region, F&& term)
{
    decltype(term(0u, 0u)) acc{};
    const auto n = static_cast<std::uint32_t>(config.size());
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j)
            if (region.contains(config.at(i).x) || region.contains(config.at(j).x)) acc += term(i, j);
    return acc;
}

} // namespace

ExtReal hamiltonian(const PottsPotential& pot, const Configuration& config, const Window& region)
{
    ExtReal acc;
    for (const auto& [i, j] : pairs_within(config, pot.norm(), pot.range(), region)) acc += pot(config.at(i), config.at(j));
    return acc;
}

ExtReal hamiltonian_bruteforce(const PottsPotential& pot, const Configuration& config, const Window& region)
{
    return bruteforce_sum(config, region, [&](std::uint32_t i, std::uint32_t j) {
        return pot.norm()(config.at(i).x - config.at(j).x) <= pot.range() ? pot(config.at(i), config.at(j))
                                                                            : ExtReal(0.0);
    });
}

double hamiltonian_smooth(const DecomposedPotential& dec, const Configuration& config, const Window& region)
{
    double acc = 0.0;
    for (const auto& [i, j] : pairs_within(config, dec.base().norm(), dec.smooth_range(), region))
        acc += dec.smooth(config.at(i), config.at(j));
    return acc;
}

double hamiltonian_smooth_bruteforce(const DecomposedPotential& dec, const Configuration& config,
                                     const Window& region)
{
    return bruteforce_sum(config, region, [&](std::uint32_t i, std::uint32_t j) {
        return dec.base().norm()(config.at(i).x - config.at(j).x) <= dec.smooth_range()
                   ? dec.smooth(config.at(i), config.at(j))
                   : 0.0;
    });
}

double hamiltonian_small(const DecomposedPotential& dec, const Configuration& config, const Window& region)
{
    double acc = 0.0;
    for (const auto& [i, j] : pairs_within(config, dec.base().norm(), dec.small_support(), region))
        acc += dec.small(config.at(i), config.at(j));
    return acc;
}

ExtReal interaction(const PottsPotential& pot, const std::vector<Particle>& a, const std::vector<Particle>& b)
{
    ExtReal acc;
    for (const auto& p : a)
        for (const auto& q : b) acc += pot(p, q);
    return acc;
}

} // namespace cg
