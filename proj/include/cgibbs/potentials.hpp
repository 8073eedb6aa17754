#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cgibbs/core.hpp"

namespace cg {

// c[0] + c[1] t + c[2] t^2 + c[3] t^3 in the local variable t = r - (left breakpoint).
struct Cubic {
    std::array<double, 4> c{};

    double operator()(double t) const { return c[0] + t * (c[1] + t * (c[2] + t * c[3])); }
    double d1(double t) const { return c[1] + t * (2.0 * c[2] + t * 3.0 * c[3]); }
    bool is_affine() const { return c[2] == 0.0 && c[3] == 0.0; }
    bool is_constant() const { return is_affine() && c[1] == 0.0; }
    // min and max over [0, len].
    std::pair<double, double> range_on(double len) const;
    // max |d1| over [0, len].
    double max_slope_on(double len) const;
    friend bool operator==(const Cubic&, const Cubic&) = default;
};

// +inf on [0, r0], pieces[i] on (r_i, r_{i+1}), point_values[i - 1] at r_i for i >= 1, 0 beyond r_n.
class WellBehavedFn {
public:
    WellBehavedFn(std::vector<double> breakpoints, std::vector<Cubic> pieces, std::vector<double> point_values);
    static WellBehavedFn hard_core(double r0);
    // height on (r0, r1), value_at_r1 at r1, 0 beyond.
    static WellBehavedFn step(double r0, double r1, double height, double value_at_r1);

    ExtReal operator()(double r) const;
    double hard_core_radius() const { return breakpoints_.front(); }
    std::size_t jump_count() const { return pieces_.size(); }
    double outer() const { return breakpoints_.back(); }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<Cubic>& pieces() const { return pieces_; }
    const std::vector<double>& point_values() const { return point_values_; }
    // One-sided limits at r_i, 1 <= i <= n.
    double left_limit(std::size_t i) const;
    double right_limit(std::size_t i) const;
    // Value strictly above r0, always finite.
    double finite_value(double r) const;
    bool is_zero_beyond_core() const;
    friend bool operator==(const WellBehavedFn&, const WellBehavedFn&) = default;

private:
    std::vector<double> breakpoints_;
    std::vector<Cubic> pieces_;
    std::vector<double> point_values_;
};

// The continuous majorant fn v max_i hat_i and the small remainder.
class HatSplit {
public:
    HatSplit(const WellBehavedFn& fn, double eps);

    const WellBehavedFn& fn() const { return fn_; }
    double eps() const { return eps_; }
    double peak(std::size_t i) const { return peaks_.at(i - 1); }
    double hat(std::size_t i, double r) const;
    // Defined for r > r0; finite.
    double continuous(double r) const;
    // continuous - fn for r > r0; 0 for r <= r0.
    double small(double r) const;
    // Right limit of continuous() at r0.
    double continuous_at_core() const;
    // Lipschitz constant of continuous() on (r0, inf).
    double lipschitz() const;
    // Points in (r0, inf) where continuous() may fail to be smooth.
    std::vector<double> kinks() const;

private:
    WellBehavedFn fn_;
    double eps_;
    std::vector<double> peaks_;
};

HatSplit decompose_well_behaved(const WellBehavedFn& fn, double eps);

class PottsPotential {
public:
    // table is row-major |S| x |S|; eps <= 0 selects 0.05 * min positive hard-core radius.
    PottsPotential(Norm norm, std::uint32_t spin_count, std::vector<WellBehavedFn> table, double eps = 0.0);

    const Norm& norm() const { return norm_; }
    std::uint32_t spin_count() const { return spin_count_; }
    double eps() const { return eps_; }
    const WellBehavedFn& fn(Spin a, Spin b) const { return table_.at(a.id * spin_count_ + b.id); }
    double hard_core(Spin a, Spin b) const { return fn(a, b).hard_core_radius(); }
    ExtReal operator()(const Particle& a, const Particle& b) const;
    // U vanishes and is finite beyond this distance.
    double range() const { return range_; }
    double min_positive_hard_core() const;
    double max_hard_core() const;
    void check_spin(Spin s) const;

private:
    Norm norm_;
    std::uint32_t spin_count_;
    std::vector<WellBehavedFn> table_;
    double eps_;
    double range_;
};

enum class PairRegion { hard_core, k_minus_hard_core, k1_minus_k, k2_minus_k1, outside };
std::string to_string(PairRegion r);
PairRegion pair_region(const PottsPotential& pot, const Particle& y1, const Particle& y2);

// Smooth radial function on [0, inf), C^2, zero beyond range().
class SmoothRadial {
public:
    SmoothRadial() = default;
    SmoothRadial(const HatSplit& split, double mollify_width);

    double value(double r) const;
    double d1(double r) const;
    double d2(double r) const;
    double range() const { return range_; }
    bool is_zero() const { return range_ == 0.0; }
    // Lifted level added over the concave set; 0 when nothing needed lifting.
    double lift() const { return lift_; }

private:
    struct Cell {
        std::array<double, 6> c;
    };
    void eval(double r, double& v, double& dv, double& ddv) const;

    double h_ = 0.0;
    double range_ = 0.0;
    double lift_ = 0.0;
    std::vector<Cell> cells_;
};

// Standard bump kernel on (-width, width), normalized.
class Mollifier {
public:
    explicit Mollifier(double width);
    double width() const { return width_; }
    double operator()(double t) const;
    double d1(double t) const;
    double d2(double t) const;
    double mean_abs() const { return mean_abs_; }

private:
    double width_;
    double norm_;
    double mean_abs_;
};

struct DecompositionConstants {
    double c_K = 0.0;
    double c_f = 0.0;
    double c_psi = 0.0;
    double c_u = 0.0;
    double c_xi = 0.0;
    double psi_level = 0.0;
    double psi_range = 0.0;
};

class DecomposedPotential {
public:
    DecomposedPotential(PottsPotential base, double mollify_width, double z, double xi);

    const PottsPotential& base() const { return base_; }
    double eps() const { return base_.eps(); }
    double mollify_width() const { return mollify_width_; }
    double z() const { return z_; }
    double xi() const { return xi_; }
    const DecompositionConstants& constants() const { return constants_; }
    const SmoothRadial& smooth_radial(Spin a, Spin b) const { return smooth_.at(a.id * base_.spin_count() + b.id); }
    const HatSplit& split(Spin a, Spin b) const { return splits_.at(a.id * base_.spin_count() + b.id); }

    double smooth(const Particle& a, const Particle& b) const;
    // u; 0 on the hard core.
    double small(const Particle& a, const Particle& b) const;
    double small_at(Spin a, Spin b, double d) const;
    double utilde(const Particle& a, const Particle& b) const;
    double psi(const Particle& a, const Particle& b) const;
    // First and second derivative of t -> smooth(a, b + t e) at t = 0.
    double smooth_e_d1(const Particle& a, const Particle& b) const;
    double smooth_e_d2(const Particle& a, const Particle& b) const;
    // Smoothstep cutoff: 0 on K, 1 outside K''.
    double fK(const Particle& a, const Particle& b) const;
    // Derivative of t -> fK(a, b + t e) at t = 0.
    double fK_e_d1(const Particle& a, const Particle& b) const;
    double k2_radius(Spin a, Spin b) const { return base_.hard_core(a, b) + 2.0 * base_.eps(); }
    double max_k2_radius() const;
    // u and utilde vanish for pairs farther apart than this.
    double small_support() const { return small_support_; }
    double smooth_range() const { return smooth_range_; }
    // Per spin pair contribution to c_xi: the K''-minus-K^U area.
    double annulus_area(Spin a, Spin b) const;

private:
    PottsPotential base_;
    double mollify_width_;
    double z_;
    double xi_;
    std::vector<HatSplit> splits_;
    std::vector<SmoothRadial> smooth_;
    DecompositionConstants constants_;
    double small_support_ = 0.0;
    double smooth_range_ = 0.0;
};

struct DecompositionOptions {
    double mollify_width = 0.0; // <= 0 selects eps / 4
    double z = 1.0;
    double xi = 1.0;
};

// Throws ParameterError("activity too large for decomposition") when c_xi >= 1/(z xi).
DecomposedPotential build_decomposition(const PottsPotential& pot, const DecompositionOptions& opts);

double smoothstep(double s);
double smoothstep_d1(double s);

// Sums over unordered pairs with at least one particle in region. Summation order is by (i, j).
ExtReal hamiltonian(const PottsPotential& pot, const Configuration& config, const Window& region);
ExtReal hamiltonian_bruteforce(const PottsPotential& pot, const Configuration& config, const Window& region);
double hamiltonian_smooth(const DecomposedPotential& dec, const Configuration& config, const Window& region);
double hamiltonian_smooth_bruteforce(const DecomposedPotential& dec, const Configuration& config,
                                     const Window& region);
double hamiltonian_small(const DecomposedPotential& dec, const Configuration& config, const Window& region);
// Mutual energy W(A, B) = sum over a in A, b in B.
ExtReal interaction(const PottsPotential& pot, const std::vector<Particle>& a, const std::vector<Particle>& b);

// Index pairs (i < j) of the combined list with at least one particle in region and distance <= cutoff.
std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_within(const Configuration& config, const Norm& norm,
                                                                  double cutoff,
                                                                  const std::optional<Window>& region);

} // namespace cg
