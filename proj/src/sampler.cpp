#include "cgibbs/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace cg {

void GibbsParams::validate() const
{
    if (!(z > 0.0) || !std::isfinite(z)) throw ParameterError("activity z must be positive");
    const double total = mix.birth + mix.death + mix.move;
    if (mix.birth < 0 || mix.death < 0 || mix.move < 0 || std::abs(total - 1.0) > 1e-12)
        throw ParameterError("move probabilities must be nonnegative and sum to 1");
    if (mix.birth == 0.0 || mix.death == 0.0) throw ParameterError("birth and death probabilities must be positive");
    if (thinning == 0) throw ParameterError("thinning must be positive");
    for (const auto& p : boundary) {
        pot.check_spin(p.spin);
        if (window.contains(p.x)) throw ParameterError("boundary particle inside window");
    }
}

double GibbsParams::sigma() const
{
    if (move_sigma > 0.0) return move_sigma;
    const double r = pot.min_positive_hard_core();
    return r > 0.0 ? 0.25 * r : 0.25;
}

std::size_t GibbsParams::sweep_length() const
{
    if (steps_per_sweep > 0) return steps_per_sweep;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(z * window.area())));
}

GibbsChain::GibbsChain(GibbsParams params, std::vector<Particle> interior)
    : params_(std::move(params)), grid_(params_.pot.range() > 0.0 ? params_.pot.range() * params_.pot.norm().max_norm_stretch() : 1.0)
{
    params_.validate();
    for (std::size_t k = 0; k < params_.boundary.size(); ++k)
        grid_.insert(boundary_tag | static_cast<std::uint32_t>(k), params_.boundary[k].x);
    for (const auto& p : interior) {
        params_.pot.check_spin(p.spin);
        if (!params_.window.contains(p.x)) throw ParameterError("initial particle outside window");
        add(p);
    }
    energy_ = hamiltonian(params_.pot, configuration(), params_.window);
    if (energy_.is_infinite()) throw ParameterError("initial configuration violates the hard core");
}

ExtReal GibbsChain::local_energy(const Particle& p, std::uint32_t skip) const
{
    const auto& pot = params_.pot;
    const double range = pot.range();
    ExtReal acc;
    if (range <= 0.0) return acc;
    grid_.for_each_near(p.x, range * pot.norm().max_norm_stretch(), [&](std::uint32_t id) {
        if (id == skip || acc.is_infinite()) return;
        const Particle& q = (id & boundary_tag) ? params_.boundary[id & ~boundary_tag] : interior_[id];
        if (pot.norm()(p.x - q.x) <= range) acc += pot(p, q);
    });
    return acc;
}

void GibbsChain::add(const Particle& p)
{
    grid_.insert(static_cast<std::uint32_t>(interior_.size()), p.x);
    interior_.push_back(p);
}

void GibbsChain::remove(std::size_t i)
{
    const auto last = interior_.size() - 1;
    grid_.erase(static_cast<std::uint32_t>(i), interior_[i].x);
    if (i != last) {
        grid_.erase(static_cast<std::uint32_t>(last), interior_[last].x);
        interior_[i] = interior_[last];
        grid_.insert(static_cast<std::uint32_t>(i), interior_[i].x);
    }
    interior_.pop_back();
}

Vec2 GibbsChain::propose_location(RandomStream& rng) const
{
    const double r = params_.window.r();
    double x0 = rng.uniform(-r, r);
    const double x1 = rng.uniform(-r, r);
    if (params_.birth_tilt != 0.0) {
        // Rejection sampling of the density proportional to exp(tilt * clamp(x0, -2, 2)).
        const double a = std::abs(params_.birth_tilt);
        const double sign = params_.birth_tilt > 0.0 ? 1.0 : -1.0;
        while (rng.uniform() >= std::exp(a * (sign * std::clamp(x0, -2.0, 2.0) - 2.0))) x0 = rng.uniform(-r, r);
    }
    return {x0, x1};
}

void GibbsChain::step(RandomStream& rng)
{
    const auto& mix = params_.mix;
    const double area = params_.window.area();
    const double z = params_.z;
    const double u = rng.uniform();
    const auto n = interior_.size();
    if (u < mix.birth) {
        ++counters_.proposed[0];
        Particle p{propose_location(rng), Spin{static_cast<std::uint32_t>(rng.below(params_.pot.spin_count()))}};
        const ExtReal de = local_energy(p, ~0u);
        if (!de.is_infinite()) {
            const double a = z * area / static_cast<double>(n + 1) * std::exp(-de.value()) * mix.death / mix.birth;
            if (rng.uniform() < a) {
                add(p);
                energy_ += de;
                ++counters_.accepted[0];
            }
        }
    } else if (u < mix.birth + mix.death) {
        ++counters_.proposed[1];
        if (n > 0) {
            const auto i = static_cast<std::size_t>(rng.below(n));
            const double de = local_energy(interior_[i], static_cast<std::uint32_t>(i)).value();
            const double a = static_cast<double>(n) / (z * area) * std::exp(de) * mix.birth / mix.death;
            if (rng.uniform() < a) {
                remove(i);
                energy_ = ExtReal(std::max(0.0, energy_.value() - de));
                ++counters_.accepted[1];
            }
        }
    } else {
        ++counters_.proposed[2];
        if (n > 0) {
            const auto i = static_cast<std::size_t>(rng.below(n));
            const double s = params_.sigma();
            Particle moved = interior_[i];
            moved.x = moved.x + Vec2{s * rng.normal(), s * rng.normal()};
            const double coin = rng.uniform();
            if (params_.window.contains(moved.x)) {
                const auto id = static_cast<std::uint32_t>(i);
                const ExtReal fresh = local_energy(moved, id);
                if (!fresh.is_infinite()) {
                    const double old = local_energy(interior_[i], id).value();
                    const double de = fresh.value() - old;
                    if (coin < std::exp(-de)) {
                        grid_.erase(id, interior_[i].x);
                        interior_[i] = moved;
                        grid_.insert(id, moved.x);
                        energy_ = ExtReal(std::max(0.0, energy_.value() + de));
                        ++counters_.accepted[2];
                    }
                }
            }
        }
    }
    ++steps_;
    if (steps_ % resync_period == 0) resync();
}

void GibbsChain::resync()
{
    const ExtReal fresh = hamiltonian(params_.pot, configuration(), params_.window);
    const double err = std::abs(fresh.value() - energy_.value());
    if (fresh.is_infinite() || !(err <= 1e-6)) throw std::logic_error("energy cache diverged from recomputation");
    counters_.max_resync_error = std::max(counters_.max_resync_error, err);
    ++counters_.resyncs;
    energy_ = fresh;
}

void GibbsChain::sweep(RandomStream& rng)
{
    const auto len = params_.sweep_length();
    for (std::size_t s = 0; s < len; ++s) step(rng);
}

Configuration GibbsChain::configuration() const { return Configuration(params_.window, interior_, params_.boundary); }

ChainState GibbsChain::state() const { return ChainState{configuration(), energy_, steps_}; }

Configuration sample_poisson(const Window& window, double intensity, std::uint32_t spin_count, RandomStream& rng)
{
    if (!(intensity > 0.0)) throw ParameterError("intensity must be positive");
    if (spin_count < 1) throw ParameterError("spin space must be nonempty");
    const auto n = rng.poisson(intensity * window.area());
    std::vector<Particle> ps;
    ps.reserve(n);
    const double r = window.r();
    for (std::uint64_t k = 0; k < n; ++k) {
        const double x0 = rng.uniform(-r, r);
        const double x1 = rng.uniform(-r, r);
        ps.push_back({{x0, x1}, Spin{static_cast<std::uint32_t>(rng.below(spin_count))}});
    }
    return Configuration(window, std::move(ps));
}

std::vector<Particle> poisson_ring(const Window& window, double width, double intensity, std::uint32_t spin_count,
                                   RandomStream& rng)
{
    const double outer = window.r() + width;
    const double area = 4.0 * outer * outer - window.area();
    const auto n = rng.poisson(intensity * area);
    std::vector<Particle> out;
    while (out.size() < n) {
        const Vec2 x{rng.uniform(-outer, outer), rng.uniform(-outer, outer)};
        if (window.contains(x)) continue;
        out.push_back({x, Spin{static_cast<std::uint32_t>(rng.below(spin_count))}});
    }
    return out;
}

ChainState mcmc_step(const ChainState& state, const GibbsParams& params, RandomStream& rng)
{
    GibbsParams p = params;
    p.window = state.config.window();
    p.boundary = state.config.boundary();
    GibbsChain chain(std::move(p), state.config.interior());
    chain.step(rng);
    ChainState out = chain.state();
    out.step = state.step + 1;
    return out;
}

std::vector<Configuration> run_chain(const GibbsParams& params, RandomStream& rng)
{
    GibbsChain chain(params);
    std::vector<Configuration> out;
    if (params.sweeps == 0) return out;
    for (std::size_t s = 0; s < params.burn_in; ++s) chain.sweep(rng);
    for (std::size_t s = 1; s <= params.sweeps; ++s) {
        chain.sweep(rng);
        if (s % params.thinning == 0) out.push_back(chain.configuration());
    }
    return out;
}

std::vector<CorrelationEstimate> estimate_correlation(const std::vector<Configuration>& samples,
                                                      const std::vector<std::vector<Particle>>& probes,
                                                      const PottsPotential& pot, double xi)
{
    if (samples.empty()) throw ParameterError("correlation estimate needs at least one sample");
    std::vector<CorrelationEstimate> out;
    for (const auto& probe : probes) {
        ExtReal self;
        for (std::size_t i = 0; i < probe.size(); ++i)
            for (std::size_t j = i + 1; j < probe.size(); ++j) self += pot(probe[i], probe[j]);
        CorrelationEstimate est;
        if (!self.is_infinite()) {
            double sum = 0.0, sum2 = 0.0;
            for (const auto& s : samples) {
                const double w = interaction(pot, probe, s.all()).boltzmann();
                sum += w;
                sum2 += w * w;
            }
            const double n = static_cast<double>(samples.size());
            const double mean = sum / n;
            const double var = n > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1)) : 0.0;
            est.estimate = self.boltzmann() * mean;
            est.standard_error = self.boltzmann() * std::sqrt(var / n);
        }
        est.violation = est.estimate > std::pow(xi, static_cast<double>(probe.size())) + 3.0 * est.standard_error;
        out.push_back(est);
    }
    return out;
}

} // namespace cg
