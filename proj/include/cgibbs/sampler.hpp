#pragma once

#include <cstdint>
#include <vector>

#include "cgibbs/core.hpp"
#include "cgibbs/potentials.hpp"

namespace cg {

struct MoveMix {
    double birth = 0.35;
    double death = 0.35;
    double move = 0.30;
};

struct GibbsParams {
    double z = 1.0;
    PottsPotential pot;
    Window window{1.0};
    std::vector<Particle> boundary;
    MoveMix mix;
    std::size_t sweeps = 0;
    std::size_t burn_in = 0;
    std::size_t thinning = 1;
    // <= 0 selects 0.25 * min positive hard-core radius (0.25 without a hard core).
    double move_sigma = 0.0;
    // 0 selects max(1, ceil(z * area)).
    std::size_t steps_per_sweep = 0;
    // Negative-control fixture: births proposed with density proportional to exp(tilt * clamp(x0, -2, 2))
    // while acceptance assumes uniform proposals. Must stay 0 outside tests.
    double birth_tilt = 0.0;

    void validate() const;
    double sigma() const;
    std::size_t sweep_length() const;
};

struct ChainState {
    Configuration config;
    ExtReal energy;
    std::uint64_t step = 0;
};

struct ChainCounters {
    std::uint64_t proposed[3] = {0, 0, 0};
    std::uint64_t accepted[3] = {0, 0, 0};
    std::uint64_t resyncs = 0;
    double max_resync_error = 0.0;
};

// Grand-canonical Metropolis-Hastings chain for weight z^N e^{-H} against the unit Poisson process
// on the window, with the boundary particles fixed.
class GibbsChain {
public:
    static constexpr std::uint64_t resync_period = 10000;

    GibbsChain(GibbsParams params, std::vector<Particle> interior = {});

    void step(RandomStream& rng);
    void sweep(RandomStream& rng);
    ChainState state() const;
    Configuration configuration() const;
    const std::vector<Particle>& interior() const { return interior_; }
    ExtReal energy() const { return energy_; }
    std::uint64_t steps() const { return steps_; }
    const ChainCounters& counters() const { return counters_; }
    const GibbsParams& params() const { return params_; }

private:
    static constexpr std::uint32_t boundary_tag = 0x80000000u;
    ExtReal local_energy(const Particle& p, std::uint32_t skip) const;
    void add(const Particle& p);
    void remove(std::size_t i);
    void resync();
    Vec2 propose_location(RandomStream& rng) const;

    GibbsParams params_;
    std::vector<Particle> interior_;
    CellGrid grid_;
    ExtReal energy_;
    std::uint64_t steps_ = 0;
    ChainCounters counters_;
};

Configuration sample_poisson(const Window& window, double intensity, std::uint32_t spin_count, RandomStream& rng);
// Poisson particles in Lambda_{r + width} minus Lambda_r.
std::vector<Particle> poisson_ring(const Window& window, double width, double intensity, std::uint32_t spin_count,
                                   RandomStream& rng);

ChainState mcmc_step(const ChainState& state, const GibbsParams& params, RandomStream& rng);
std::vector<Configuration> run_chain(const GibbsParams& params, RandomStream& rng);

struct CorrelationEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    bool violation = false;
};

// e^{-H(probe)} * mean over samples of e^{-W(probe, sample)}; flags estimate > xi^{#probe} + 3 SE.
std::vector<CorrelationEstimate> estimate_correlation(const std::vector<Configuration>& samples,
                                                      const std::vector<std::vector<Particle>>& probes,
                                                      const PottsPotential& pot, double xi = 1.0);

} // namespace cg
