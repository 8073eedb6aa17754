#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <boost/random/mersenne_twister.hpp>

namespace cg {

// Raised for violated preconditions on user-facing inputs.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Vec2 {
    double x0 = 0.0;
    double x1 = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x0 + b.x0, a.x1 + b.x1}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x0 - b.x0, a.x1 - b.x1}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x0, s * a.x1}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double max_abs(Vec2 v) { return std::max(std::abs(v.x0), std::abs(v.x1)); }

struct Spin {
    std::uint32_t id = 0;
    friend bool operator==(Spin, Spin) = default;
};

struct Particle {
    Vec2 x;
    Spin spin;
    friend bool operator==(const Particle&, const Particle&) = default;
};

// Centred square [-r, r)^2.
class Window {
public:
    explicit Window(double r);
    double r() const { return r_; }
    double area() const { return 4.0 * r_ * r_; }
    bool contains(Vec2 x) const { return x.x0 >= -r_ && x.x0 < r_ && x.x1 >= -r_ && x.x1 < r_; }

private:
    double r_;
};

// Interior particles lie in the window, boundary particles outside it.
// Particle i of the combined list is interior()[i] for i < interior_count(),
// boundary()[i - interior_count()] otherwise.
class Configuration {
public:
    Configuration(Window window, std::vector<Particle> interior, std::vector<Particle> boundary = {});

    const Window& window() const { return window_; }
    const std::vector<Particle>& interior() const { return interior_; }
    const std::vector<Particle>& boundary() const { return boundary_; }
    std::size_t interior_count() const { return interior_.size(); }
    std::size_t size() const { return interior_.size() + boundary_.size(); }
    const Particle& at(std::size_t i) const
    {
        return i < interior_.size() ? interior_[i] : boundary_[i - interior_.size()];
    }
    std::vector<Particle> all() const;
    std::uint32_t max_spin() const;

private:
    Window window_;
    std::vector<Particle> interior_;
    std::vector<Particle> boundary_;
};

Configuration restrict(const Configuration& config, const Window& region);

enum class NormKind { max, euclidean, weighted };

// |x|_h. The weighted kind is sqrt(w0 x0^2 + w1 x1^2) with w0, w1 > 0.
class Norm {
public:
    Norm() = default;
    static Norm max() { return Norm(NormKind::max, 1.0, 1.0); }
    static Norm euclidean() { return Norm(NormKind::euclidean, 1.0, 1.0); }
    static Norm weighted(double w0, double w1);

    NormKind kind() const { return kind_; }
    std::array<double, 2> weights() const { return {w0_, w1_}; }
    double operator()(Vec2 v) const;
    // Derivative of |v|_h with respect to v.x0; 0 on the max-norm diagonal.
    double d0(Vec2 v) const;
    // Second derivative in v.x0 where it exists.
    double d00(Vec2 v) const;
    // Upper bound of |d00(v)| * |v|_h.
    double curvature_bound() const;
    // |e|_h for e = (1, 0); also the Lipschitz constant of |.|_h along e.
    double e_length() const;
    double unit_ball_area() const;
    // sup of |x|_max over the unit ball of |.|_h.
    double max_norm_stretch() const;
    std::string name() const;

private:
    Norm(NormKind k, double w0, double w1) : kind_(k), w0_(w0), w1_(w1) {}
    NormKind kind_ = NormKind::euclidean;
    double w0_ = 1.0;
    double w1_ = 1.0;
};

double distance(const Particle& a, const Particle& b, const Norm& norm);

// Real or +infinity. Never NaN, never -infinity.
class ExtReal {
public:
    constexpr ExtReal() = default;
    ExtReal(double v);
    static ExtReal infinity() { return ExtReal(std::numeric_limits<double>::infinity()); }

    bool is_infinite() const { return std::isinf(v_); }
    double value() const { return v_; }
    // e^{-v}, exactly 0 at +infinity.
    double boltzmann() const { return is_infinite() ? 0.0 : std::exp(-v_); }

    ExtReal& operator+=(ExtReal o)
    {
        v_ += o.v_;
        return *this;
    }
    friend ExtReal operator+(ExtReal a, ExtReal b) { return a += b; }
    friend auto operator<=>(ExtReal a, ExtReal b) { return a.v_ <=> b.v_; }
    friend bool operator==(ExtReal a, ExtReal b) { return a.v_ == b.v_; }

private:
    double v_ = 0.0;
};

// Deterministic stream keyed by (seed, label). Draws are platform-independent.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string_view label);

    RandomStream split(std::string_view child) const;
    std::uint64_t seed() const { return seed_; }
    const std::string& label() const { return label_; }

    std::uint64_t bits() { return engine_(); }
    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    std::uint64_t below(std::uint64_t n);
    double normal();
    std::uint64_t poisson(double mean);
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t seed_;
    std::string label_;
    boost::random::mt19937_64 engine_;
};

RandomStream rng_stream(std::uint64_t seed, std::string_view label);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view s);

// Uniform hash grid over the plane; cells of side h.
class CellGrid {
public:
    explicit CellGrid(double h);
    void insert(std::uint32_t id, Vec2 x);
    void erase(std::uint32_t id, Vec2 x);
    // Calls fn(id) for every stored id whose cell meets the max-norm box of half-width radius around x.
    template <class Fn>
    void for_each_near(Vec2 x, double radius, Fn&& fn) const
    {
        const auto lo0 = coord(x.x0 - radius), hi0 = coord(x.x0 + radius);
        const auto lo1 = coord(x.x1 - radius), hi1 = coord(x.x1 + radius);
        if ((hi0 - lo0 + 1) * (hi1 - lo1 + 1) > static_cast<std::int64_t>(cells_.size()) * 4 + 64) {
            for (const auto& [key, ids] : cells_)
                for (auto id : ids) fn(id);
            return;
        }
        for (auto c0 = lo0; c0 <= hi0; ++c0)
            for (auto c1 = lo1; c1 <= hi1; ++c1) {
                auto it = cells_.find(key_of(c0, c1));
                if (it == cells_.end()) continue;
                for (auto id : it->second) fn(id);
            }
    }

private:
    std::int64_t coord(double v) const { return static_cast<std::int64_t>(std::floor(v / h_)); }
    static std::uint64_t key_of(std::int64_t c0, std::int64_t c1)
    {
        return (static_cast<std::uint64_t>(c0) << 32) ^ (static_cast<std::uint64_t>(c1) & 0xffffffffULL);
    }
    double h_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

// Runs fn(i) for i in [0, n) on up to `threads` workers; fn must be safe to call concurrently.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

} // namespace cg
