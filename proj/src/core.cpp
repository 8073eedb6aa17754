#include "cgibbs/core.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace cg {

Window::Window(double r) : r_(r)
{
    if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("window half-width must be positive and finite");
}

namespace {

void require_finite(const Particle& p)
{
    if (!std::isfinite(p.x.x0) || !std::isfinite(p.x.x1)) throw ParameterError("particle position is not finite");
}

} // namespace

Configuration::Configuration(Window window, std::vector<Particle> interior, std::vector<Particle> boundary)
    : window_(window), interior_(std::move(interior)), boundary_(std::move(boundary))
{
    for (const auto& p : interior_) {
        require_finite(p);
        if (!window_.contains(p.x)) throw ParameterError("interior particle outside window");
    }
    for (const auto& p : boundary_) {
        require_finite(p);
        if (window_.contains(p.x)) throw ParameterError("boundary particle inside window");
    }
    std::vector<Vec2> xs;
    xs.reserve(size());
    for (const auto& p : interior_) xs.push_back(p.x);
    for (const auto& p : boundary_) xs.push_back(p.x);
    std::sort(xs.begin(), xs.end(), [](Vec2 a, Vec2 b) { return a.x0 < b.x0 || (a.x0 == b.x0 && a.x1 < b.x1); });
    if (std::adjacent_find(xs.begin(), xs.end()) != xs.end()) throw ParameterError("duplicate particle position");
}

std::vector<Particle> Configuration::all() const
{
    std::vector<Particle> out = interior_;
    out.insert(out.end(), boundary_.begin(), boundary_.end());
    return out;
}

std::uint32_t Configuration::max_spin() const
{
    std::uint32_t m = 0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, at(i).spin.id);
    return m;
}

Configuration restrict(const Configuration& config, const Window& region)
{
    if (region.r() > config.window().r()) throw ParameterError("region exceeds window");
    std::vector<Particle> inside;
    std::vector<Particle> outside;
    for (const auto& p : config.interior()) (region.contains(p.x) ? inside : outside).push_back(p);
    outside.insert(outside.end(), config.boundary().begin(), config.boundary().end());
    return Configuration(region, std::move(inside), std::move(outside));
}

Norm Norm::weighted(double w0, double w1)
{
    if (!(w0 > 0.0) || !(w1 > 0.0) || !std::isfinite(w0) || !std::isfinite(w1))
        throw ParameterError("norm weights must be positive and finite");
    return Norm(NormKind::weighted, w0, w1);
}

double Norm::operator()(Vec2 v) const
{
    switch (kind_) {
    case NormKind::max: return max_abs(v);
    case NormKind::euclidean: return std::hypot(v.x0, v.x1);
    case NormKind::weighted: return std::sqrt(w0_ * v.x0 * v.x0 + w1_ * v.x1 * v.x1);
    }
    return 0.0;
}

double Norm::d0(Vec2 v) const
{
    switch (kind_) {
    case NormKind::max:
        if (std::abs(v.x0) > std::abs(v.x1)) return v.x0 > 0 ? 1.0 : -1.0;
        return 0.0;
    case NormKind::euclidean: {
        const double d = std::hypot(v.x0, v.x1);
        return d > 0 ? v.x0 / d : 0.0;
    }
    case NormKind::weighted: {
        const double d = (*this)(v);
        return d > 0 ? w0_ * v.x0 / d : 0.0;
    }
    }
    return 0.0;
}

double Norm::d00(Vec2 v) const
{
    switch (kind_) {
    case NormKind::max: return 0.0;
    case NormKind::euclidean: {
        const double d = std::hypot(v.x0, v.x1);
        return d > 0 ? v.x1 * v.x1 / (d * d * d) : 0.0;
    }
    case NormKind::weighted: {
        const double d = (*this)(v);
        return d > 0 ? w0_ * w1_ * v.x1 * v.x1 / (d * d * d) : 0.0;
    }
    }
    return 0.0;
}

double Norm::curvature_bound() const { return kind_ == NormKind::max ? 0.0 : w0_; }

double Norm::e_length() const { return kind_ == NormKind::weighted ? std::sqrt(w0_) : 1.0; }

double Norm::unit_ball_area() const
{
    switch (kind_) {
    case NormKind::max: return 4.0;
    case NormKind::euclidean: return M_PI;
    case NormKind::weighted: return M_PI / std::sqrt(w0_ * w1_);
    }
    return 0.0;
}

double Norm::max_norm_stretch() const
{
    return kind_ == NormKind::weighted ? std::max(1.0 / std::sqrt(w0_), 1.0 / std::sqrt(w1_)) : 1.0;
}

std::string Norm::name() const
{
    switch (kind_) {
    case NormKind::max: return "max";
    case NormKind::euclidean: return "euclidean";
    case NormKind::weighted: return "weighted";
    }
    return "";
}

double distance(const Particle& a, const Particle& b, const Norm& norm) { return norm(a.x - b.x); }

ExtReal::ExtReal(double v) : v_(v)
{
    if (std::isnan(v) || v == -std::numeric_limits<double>::infinity())
        throw std::domain_error("extended real must be finite or +infinity");
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RandomStream::RandomStream(std::uint64_t seed, std::string_view label)
    : seed_(seed), label_(label), engine_(splitmix64(seed ^ splitmix64(fnv1a(label))))
{
}

RandomStream RandomStream::split(std::string_view child) const
{
    return RandomStream(seed_, label_ + "/" + std::string(child));
}

std::uint64_t RandomStream::below(std::uint64_t n)
{
    if (n == 0) throw ParameterError("below(0) is empty");
    boost::random::uniform_int_distribution<std::uint64_t> d(0, n - 1);
    return d(engine_);
}

double RandomStream::normal()
{
    boost::random::normal_distribution<double> d(0.0, 1.0);
    return d(engine_);
}

std::uint64_t RandomStream::poisson(double mean)
{
    if (!(mean >= 0.0)) throw ParameterError("poisson mean must be nonnegative");
    if (mean == 0.0) return 0;
    boost::random::poisson_distribution<std::uint64_t, double> d(mean);
    return d(engine_);
}

RandomStream rng_stream(std::uint64_t seed, std::string_view label) { return RandomStream(seed, label); }

CellGrid::CellGrid(double h) : h_(h)
{
    if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("cell size must be positive");
}

void CellGrid::insert(std::uint32_t id, Vec2 x) { cells_[key_of(coord(x.x0), coord(x.x1))].push_back(id); }

void CellGrid::erase(std::uint32_t id, Vec2 x)
{
    auto it = cells_.find(key_of(coord(x.x0), coord(x.x1)));
    if (it == cells_.end()) throw std::logic_error("cell grid erase: cell missing");
    auto& v = it->second;
    auto pos = std::find(v.begin(), v.end(), id);
    if (pos == v.end()) throw std::logic_error("cell grid erase: id missing");
    *pos = v.back();
    v.pop_back();
    if (v.empty()) cells_.erase(it);
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn)
{
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    const auto workers = std::min<std::size_t>(threads, n);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    pool.clear();
    if (error) std::rethrow_exception(error);
}

} // namespace cg
