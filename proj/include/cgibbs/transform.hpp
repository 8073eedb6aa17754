#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cgibbs/bonds.hpp"
#include "cgibbs/core.hpp"
#include "cgibbs/potentials.hpp"

namespace cg {

// Root of s log s = 1.
double taper_root();
// 1 / max(1, s log s); 1 for s <= 1.
double q_taper(double s);
// Integral of q over [0, k], closed form.
double Q_taper(double k);
double r_ratio(double s, double k);

struct TaperParams {
    double tau = 0.5;
    int R = 2;
    int n = 4;
    int nprime = 1;
    double delta = 0.25;
    // +1 translates along e = (1, 0), -1 along -e.
    int direction = 1;
    double c_K = 0.0;
    double c_f = 0.0;

    void validate() const;
};

TaperParams make_taper(double tau, int R, int n, int nprime, double delta, const DecomposedPotential& dec,
                       int direction = 1);

double tau_Rn(double s, const TaperParams& p);
// Derivative of tau_Rn; at the kinks s = R and s = n the smaller magnitude (0) is returned.
double tau_Rn_d1(double s, const TaperParams& p);

// Value and e-derivative of a distortion m_{y', t} at y.
struct Branch {
    double value = 0.0;
    double deriv = 0.0;
};

// +inf value when fK(y', y) = 1 on the local branch.
Branch m_aux(const Particle& source, double t, const Particle& y, const TaperParams& p,
             const DecomposedPotential& dec);

// Running minimum of the taper and all distortions fixed so far.
class DistortionField {
public:
    static constexpr double tie_tolerance = 1e-12;

    DistortionField(const TaperParams& p, const DecomposedPotential& dec);

    struct Value {
        double value = 0.0;
        double deriv = 0.0;
        bool tie = false;
    };

    // Returns true when the source is global (constant t everywhere).
    bool add(const Particle& source, double t, std::size_t step);
    // Minimum over the taper and sources added at steps < before_step.
    Value eval(const Particle& y, std::size_t before_step = static_cast<std::size_t>(-1)) const;
    static void combine(Value& cur, double v, double d);

private:
    struct Source {
        Particle y;
        double t;
        std::size_t step;
    };
    TaperParams p_;
    const DecomposedPotential& dec_;
    std::vector<Source> local_;
    std::vector<Source> global_;
    CellGrid grid_;
};

struct StepRecord {
    std::vector<std::uint32_t> P;
    std::vector<std::uint32_t> C;
    double tau = 0.0;
};

struct FactorRecord {
    std::uint32_t particle = 0;
    std::size_t step = 0;
    double deriv = 0.0;
    double factor = 1.0;
    bool tie = false;
};

struct TransformResult {
    std::vector<StepRecord> partition;
    std::vector<double> t_map;
    Configuration transformed{Window(1.0), {}};
    BondSet transformed_bonds;
    double density = 1.0;
    std::vector<FactorRecord> factors;
    int direction = 1;
    std::size_t ties = 0;
    // Fixed particles whose distortion was the constant branch.
    std::size_t global_sources = 0;
    std::string kind;
};

TransformResult forward_transform(const Configuration& config, const BondSet& bonds, const TaperParams& p,
                                  const DecomposedPotential& dec);
TransformResult backward_transform(const Configuration& config, const BondSet& bonds, const TaperParams& p,
                                   const DecomposedPotential& dec);
// Inverts the transform along p.direction; t_map holds the recovered translation distances.
TransformResult inverse_transform(const Configuration& config, const BondSet& bonds, const TaperParams& p,
                                  const DecomposedPotential& dec);
double density(const TransformResult& result);

// t_k(x) rebuilt from a forward result, for audits (Lipschitz and finite-difference checks).
class StepFunctions {
public:
    StepFunctions(const Configuration& config, const TransformResult& result, const TaperParams& p,
                  const DecomposedPotential& dec);
    DistortionField::Value eval(std::size_t k, const Particle& y) const { return field_.eval(y, k); }
    std::size_t steps() const { return steps_; }

private:
    DistortionField field_;
    std::size_t steps_;
};

// 1{|y| <= |y'|} (tau_Rn(|y| - c_K) - tau_Rn(|y'|))^2.
double tau_q(const Particle& y, const Particle& yp, const TaperParams& p);

struct GoodConfigReport {
    std::array<double, 5> sigma{};
    double cluster_range = no_cluster;
    bool is_good = true;

    double sigma_total() const { return sigma[0] + sigma[1] + sigma[2] + sigma[3] + sigma[4]; }
    bool has_cluster() const { return cluster_range != no_cluster; }
};

GoodConfigReport good_config_report(const Configuration& config, const BondSet& bonds, const TaperParams& p,
                                    const DecomposedPotential& dec);

} // namespace cg
