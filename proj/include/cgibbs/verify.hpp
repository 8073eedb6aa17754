#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cgibbs/bonds.hpp"
#include "cgibbs/model.hpp"
#include "cgibbs/transform.hpp"

namespace cg {

struct CheckResult {
    std::string name;
    bool pass = true;
    // Nothing was there to check; counts as a pass but is reported separately.
    bool vacuous = false;
    std::size_t count = 0;
    double measured = 0.0;
    double tolerance = 0.0;
    std::uint64_t seed = 0;
    std::string detail;
};

struct SuiteReport {
    std::string suite;
    std::uint64_t seed = 0;
    double seconds = 0.0;
    std::vector<CheckResult> checks;

    CheckResult& add(CheckResult c);
    void merge(const SuiteReport& other);
    bool passed() const;
    std::string table() const;
};

struct TestResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p = 1.0;
};

double chi_square_sf(double statistic, double dof);
// Observed vs expected cell counts; cells are used as given.
TestResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected);
// Count histogram vs Poisson(mean); tail cells are pooled until each expected count is >= min_expected.
TestResult poisson_gof(const std::vector<std::uint64_t>& counts, double mean, double min_expected = 5.0);
// Rows are samples, columns categories; columns with zero total are dropped.
TestResult contingency_chi_square(const std::vector<std::vector<double>>& table);
// Survival function of the Kolmogorov distribution.
double kolmogorov_sf(double lambda);
TestResult two_sample_ks(std::vector<double> a, std::vector<double> b);

struct ZTest {
    double mean = 0.0;
    double se = 0.0;
    double z = 0.0;
    std::size_t n = 0;
};
// z = mean / standard error; z = 0 when every difference is 0.
ZTest paired_z(const std::vector<double>& d);

struct LekritOutcome {
    bool criterion = false;
    bool invariant = false;
};

// Brute force over all events A of mu(tau A) + mu(tau^-1 A) >= 2 mu(A), and over points of mu o tau^-1 = mu.
LekritOutcome lekrit_toy(const std::vector<double>& mu, const std::vector<std::size_t>& perm);
SuiteReport check_lekrit_toy(const std::vector<double>& mu, const std::vector<std::size_t>& perm);
// Random instances of size <= 8 plus the fixed cases.
SuiteReport check_lekrit_suite(std::size_t instances, std::uint64_t seed);

struct AuditOptions {
    bool lipschitz = true;
    bool finite_difference = true;
    bool key_estimates = true;
    // Steps sampled for the Lipschitz audit of t_k.
    std::size_t lipschitz_steps = 4;
    std::uint64_t seed = 0;
};

struct TransformAudit {
    std::size_t instances = 0;
    std::size_t particles = 0;
    std::size_t steps = 0;
    std::size_t global_instances = 0;
    std::size_t ties = 0;
    std::size_t good = 0;
    std::size_t k_pairs = 0;
    std::size_t greps_pairs = 0;

    std::size_t mono_fail = 0;
    std::size_t vercon_fail = 0;
    std::size_t greps_fail = 0;
    std::size_t interp_fail = 0;
    std::size_t ordering_fail = 0;
    std::size_t partition_fail = 0;
    std::size_t lektk_fail = 0;
    std::size_t factor_fail = 0;
    std::size_t lipschitz_checked = 0;
    std::size_t lipschitz_fail = 0;
    std::size_t fd_checked = 0;
    std::size_t fd_skipped = 0;
    std::size_t fd_fail = 0;
    std::size_t inner_outer_fail = 0;
    std::size_t key_density_fail = 0;
    std::size_t key_energy_fail = 0;
    std::size_t bound_density_fail = 0;
    std::size_t bound_energy_fail = 0;

    double max_roundtrip_forward = 0.0;
    double max_roundtrip_inverse = 0.0;
    double max_lipschitz_ratio = 0.0;
    double max_fd_error = 0.0;
    double min_log_density_sum = 0.0;
    double max_energy_excess = -std::numeric_limits<double>::infinity();
    double max_density_bound_gap = -std::numeric_limits<double>::infinity();
    double max_energy_bound_gap = -std::numeric_limits<double>::infinity();

    void merge(const TransformAudit& o);
};

// Runs every transform property on one (Y, B).
TransformAudit audit_transform(const Configuration& config, const BondSet& bonds, const TaperParams& p,
                               const DecomposedPotential& dec, const AuditOptions& opts = {});

struct TransformSuiteOptions {
    double tau = 0.5;
    int R = 2;
    int n = 5;
    int nprime = 1;
    double delta = 0.25;
    // Simulation window half-width; must be >= n.
    double window = 6.0;
    std::size_t samples = 200;
    // Sweeps between consecutive instances.
    std::size_t spacing = 2;
    std::size_t max_particles = 100;
    // Draw Y from a Poisson process of this intensity instead of the Gibbs chain when > 0.
    double poisson_intensity = 0.0;
    unsigned threads = 1;
};

SuiteReport check_transform_suite(const Model& model, const TransformSuiteOptions& opts, std::uint64_t seed,
                                  TransformAudit* audit = nullptr, std::vector<Configuration>* samples = nullptr);

// Adds the per-property rows of an audit to a report.
void add_audit_checks(SuiteReport& report, const TransformAudit& audit, std::uint64_t seed, const std::string& prefix);

struct DensityOptions {
    double tau = 0.5;
    int R = 1;
    int n = 3;
    int nprime = 1;
    double intensity = 1.0;
    std::size_t samples = 100000;
    // Negative control: drop the Jacobian density.
    bool unit_density = false;
    unsigned threads = 1;
};

// Statistics compared by the density identity, by name.
std::vector<std::string> density_statistics();
double density_statistic(std::size_t which, const Configuration& config);

SuiteReport check_density_identity(const Model& model, const DensityOptions& opts, std::uint64_t seed);

struct InvarianceOptions {
    double window = 8.0;
    double half_width = 1.0;
    double shift = 0.5;
    std::size_t samples = 2000;
    std::size_t burn_in = 200;
    // Sweeps between samples.
    std::size_t thinning = 20;
    double ring_width = 1.0;
    double ring_intensity = 0.2;
    double birth_tilt = 0.0;
    double alpha = 0.01;
};

SuiteReport check_invariance_statistical(const Model& model, const InvarianceOptions& opts, std::uint64_t seed,
                                         std::vector<Configuration>* samples = nullptr);

struct GoodSetOptions {
    double tau = 0.5;
    double delta = 0.25;
    int nprime = 1;
    std::vector<std::pair<int, int>> radii{{4, 16}, {6, 32}, {8, 64}};
    std::size_t draws = 500;
    std::size_t burn_in = 50;
    std::size_t spacing = 2;
};

struct GoodSetPoint {
    int R = 0;
    int n = 0;
    double bad_fraction = 0.0;
    double mean_sigma = 0.0;
    std::array<double, 5> mean_sigma_parts{};
    double mean_particles = 0.0;
};

std::vector<GoodSetPoint> good_set_trend(const Model& model, const GoodSetOptions& opts, std::uint64_t seed);
SuiteReport check_good_set_trend(const Model& model, const GoodSetOptions& opts, std::uint64_t seed,
                                 std::vector<GoodSetPoint>* points = nullptr);

// Q_taper against adaptive quadrature of q.
SuiteReport check_taper_closed_form(double tolerance = 1e-8);
// U = smooth - small off K, u >= 0, utilde <= min(u, 1), c_xi < 1/(z xi).
SuiteReport check_decomposition(const Model& model, std::size_t pairs, std::uint64_t seed);
// Number of pairs in the hard core of the potential.
std::size_t hard_core_violations(const PottsPotential& pot, const Configuration& config);
// Poisson count histogram test of the zero-potential chain.
SuiteReport check_zero_potential(const Model& model, double window, std::size_t samples, std::size_t thinning,
                                 std::uint64_t seed);

} // namespace cg
