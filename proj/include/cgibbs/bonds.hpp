#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "cgibbs/core.hpp"
#include "cgibbs/potentials.hpp"

namespace cg {

using Edge = std::pair<std::uint32_t, std::uint32_t>;

// Edges are sorted, unique, with first < second; indices refer to the combined particle list.
struct BondSet {
    std::vector<Edge> edges;
    double scope = 0.0;

    void normalize();
    bool contains(std::uint32_t a, std::uint32_t b) const;
    friend bool operator==(const BondSet&, const BondSet&) = default;
};

// Throws ParameterError on self-loops or out-of-range indices.
void validate_bonds(const BondSet& bonds, const Configuration& config);

class UnionFind {
public:
    explicit UnionFind(std::size_t n);
    std::size_t find(std::size_t a);
    bool unite(std::size_t a, std::size_t b);

private:
    std::vector<std::size_t> parent_;
    std::vector<std::uint8_t> rank_;
};

// Cluster ids are numbered by first appearance in index order.
struct ClusterPartition {
    std::vector<std::uint32_t> label;
    std::vector<std::vector<std::uint32_t>> members;

    std::size_t count() const { return members.size(); }
    bool connected(std::uint32_t a, std::uint32_t b) const { return label[a] == label[b]; }
};

ClusterPartition clusters(std::size_t particle_count, const std::vector<Edge>& edges);
ClusterPartition clusters(const Configuration& config, const BondSet& bonds);

struct CandidateBond {
    Edge edge;
    double probability;
};

// Pairs with at least one particle in Lambda_n and positive utilde, in index order.
std::vector<CandidateBond> candidate_bonds(const Configuration& config, const DecomposedPotential& dec, double n);
// Includes each candidate independently with its probability.
BondSet sample_candidates(const std::vector<CandidateBond>& candidates, double scope, RandomStream& rng);
BondSet sample_bonds(const Configuration& config, const DecomposedPotential& dec, double n, RandomStream& rng);

// B together with every pair (any scope) within K''.
BondSet augment_bplus(const Configuration& config, const BondSet& bonds, const DecomposedPotential& dec);

inline constexpr double no_cluster = -std::numeric_limits<double>::infinity();

// Largest max-norm |y| over particles connected to Lambda_{inner}; no_cluster when none is inside.
double cluster_range(const Configuration& config, const BondSet& bonds, const Window& inner);

} // namespace cg
