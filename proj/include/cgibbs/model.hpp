#pragma once

#include <string>
#include <vector>

#include "cgibbs/potentials.hpp"
#include "cgibbs/sampler.hpp"

namespace cg {

struct SamplerSettings {
    std::size_t burn_in = 200;
    std::size_t thinning = 10;
    double move_sigma = 0.0;
};

// A Potts-type potential with its activity, decomposition and sampler defaults.
struct Model {
    std::string name;
    PottsPotential pot;
    double z = 1.0;
    double xi = 1.0;
    DecomposedPotential dec;
    double window = 8.0;
    SamplerSettings sampler;

    GibbsParams gibbs(double window_r, std::vector<Particle> boundary = {}) const;
};

// Throws ParameterError when the decomposition rejects the activity.
Model make_model(std::string name, PottsPotential pot, double z, double xi = 1.0, double mollify_width = 0.0);

// Two spins, hard core r0 between unlike spins, no like interaction.
Model widom_rowlinson_model(double z = 0.2, double r0 = 1.0);
// U = 0 for every spin pair; eps must be given since there is no hard core to scale it.
Model zero_model(double z = 1.0, double eps = 0.05, std::uint32_t spins = 2);
// Unlike spins: hard core r0 and a constant step of the given height up to r1. Like spins: none.
// eps <= 0 selects the default width.
Model potts_step_model(double z = 0.2, double r0 = 0.5, double r1 = 1.0, double height = 0.4, double eps = 0.0);

} // namespace cg
