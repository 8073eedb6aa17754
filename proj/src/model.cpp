#include "cgibbs/model.hpp"

#include <utility>

namespace cg {

GibbsParams Model::gibbs(double window_r, std::vector<Particle> boundary) const
{
    GibbsParams p{z, pot, Window(window_r), std::move(boundary), MoveMix{}};
    p.burn_in = sampler.burn_in;
    p.thinning = sampler.thinning;
    p.move_sigma = sampler.move_sigma;
    return p;
}

Model make_model(std::string name, PottsPotential pot, double z, double xi, double mollify_width)
{
    DecomposedPotential dec = build_decomposition(pot, {mollify_width, z, xi});
    return Model{std::move(name), std::move(pot), z, xi, std::move(dec), 8.0, SamplerSettings{}};
}

Model widom_rowlinson_model(double z, double r0)
{
    const auto none = WellBehavedFn::hard_core(0.0);
    const auto core = WellBehavedFn::hard_core(r0);
    return make_model("widom-rowlinson", PottsPotential(Norm::euclidean(), 2, {none, core, core, none}), z);
}

Model zero_model(double z, double eps, std::uint32_t spins)
{
    std::vector<WellBehavedFn> table(static_cast<std::size_t>(spins) * spins, WellBehavedFn::hard_core(0.0));
    return make_model("zero", PottsPotential(Norm::euclidean(), spins, std::move(table), eps), z);
}

Model potts_step_model(double z, double r0, double r1, double height, double eps)
{
    const auto none = WellBehavedFn::hard_core(0.0);
    const auto step = WellBehavedFn::step(r0, r1, height, height);
    return make_model("potts-step", PottsPotential(Norm::euclidean(), 2, {none, step, step, none}, eps), z);
}

} // namespace cg
