#include "cgibbs/bonds.hpp"

#include <algorithm>
#include <numeric>

namespace cg {

void BondSet::normalize()
{
    for (auto& e : edges)
        if (e.first > e.second) std::swap(e.first, e.second);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

bool BondSet::contains(std::uint32_t a, std::uint32_t b) const
{
    if (a > b) std::swap(a, b);
    return std::binary_search(edges.begin(), edges.end(), Edge{a, b});
}

void validate_bonds(const BondSet& bonds, const Configuration& config)
{
    for (const auto& [a, b] : bonds.edges) {
        if (a == b) throw ParameterError("bond is a self-loop");
        if (a >= config.size() || b >= config.size()) throw ParameterError("bond references an invalid particle index");
    }
}

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

std::size_t UnionFind::find(std::size_t a)
{
    while (parent_[a] != a) {
        parent_[a] = parent_[parent_[a]];
        a = parent_[a];
    }
    return a;
}

bool UnionFind::unite(std::size_t a, std::size_t b)
{
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
}

ClusterPartition clusters(std::size_t particle_count, const std::vector<Edge>& edges)
{
    UnionFind uf(particle_count);
    for (const auto& [a, b] : edges) uf.unite(a, b);
    ClusterPartition out;
    out.label.assign(particle_count, 0);
    std::vector<std::uint32_t> id_of_root(particle_count, ~0u);
    for (std::size_t i = 0; i < particle_count; ++i) {
        const auto root = uf.find(i);
        if (id_of_root[root] == ~0u) {
            id_of_root[root] = static_cast<std::uint32_t>(out.members.size());
            out.members.emplace_back();
        }
        out.label[i] = id_of_root[root];
        out.members[id_of_root[root]].push_back(static_cast<std::uint32_t>(i));
    }
    return out;
}

ClusterPartition clusters(const Configuration& config, const BondSet& bonds)
{
    validate_bonds(bonds, config);
    return clusters(config.size(), bonds.edges);
}

std::vector<CandidateBond> candidate_bonds(const Configuration& config, const DecomposedPotential& dec, double n)
{
    std::vector<CandidateBond> out;
    if (dec.small_support() <= 0.0) return out;
    for (const auto& e : pairs_within(config, dec.base().norm(), dec.small_support(), Window(n))) {
        const double p = dec.utilde(config.at(e.first), config.at(e.second));
        if (p > 0.0) out.push_back({e, p});
    }
    return out;
}

BondSet sample_candidates(const std::vector<CandidateBond>& candidates, double scope, RandomStream& rng)
{
    BondSet out;
    out.scope = scope;
    for (const auto& c : candidates)
        if (rng.bernoulli(c.probability)) out.edges.push_back(c.edge);
    out.normalize();
    return out;
}

BondSet sample_bonds(const Configuration& config, const DecomposedPotential& dec, double n, RandomStream& rng)
{
    return sample_candidates(candidate_bonds(config, dec, n), n, rng);
}

BondSet augment_bplus(const Configuration& config, const BondSet& bonds, const DecomposedPotential& dec)
{
    validate_bonds(bonds, config);
    BondSet out = bonds;
    const Norm& norm = dec.base().norm();
    for (const auto& [i, j] : pairs_within(config, norm, dec.max_k2_radius(), std::nullopt)) {
        const Particle& a = config.at(i);
        const Particle& b = config.at(j);
        if (norm(a.x - b.x) <= dec.k2_radius(a.spin, b.spin)) out.edges.emplace_back(i, j);
    }
    out.normalize();
    return out;
}

double cluster_range(const Configuration& config, const BondSet& bonds, const Window& inner)
{
    const auto part = clusters(config, bonds);
    std::vector<bool> touches(part.count(), false);
    for (std::size_t i = 0; i < config.size(); ++i)
        if (inner.contains(config.at(i).x)) touches[part.label[i]] = true;
    double r = no_cluster;
    for (std::size_t i = 0; i < config.size(); ++i)
        if (touches[part.label[i]]) r = std::max(r, max_abs(config.at(i).x));
    return r;
}

} // namespace cg
