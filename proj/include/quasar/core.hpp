#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace quasar {

/// Dense real vector; the decision/input space. Entries are plain doubles,
/// ownership is by value, and all operations below treat it as immutable.
using Vector = std::vector<double>;

inline bool is_finite(const Vector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline void require_same_size(const Vector& a, const Vector& b, const char* what) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

inline double dot(const Vector& a, const Vector& b) {
    require_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(const Vector& a) { return dot(a, a); }

inline double norm(const Vector& a) { return std::sqrt(squared_norm(a)); }

inline Vector sub(const Vector& a, const Vector& b) {
    require_same_size(a, b, "sub");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vector add(const Vector& a, const Vector& b) {
    require_same_size(a, b, "add");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vector scaled(const Vector& a, double s) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

/// a + s*b
inline Vector add_scaled(const Vector& a, double s, const Vector& b) {
    require_same_size(a, b, "add_scaled");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
    return r;
}

inline double distance(const Vector& a, const Vector& b) { return norm(sub(a, b)); }

/// Euclidean ball {w : ||w - center|| <= radius}. radius may be +inf to
/// express an unconstrained region.
struct BallRegion {
    Vector center;
    double radius = 0.0;

    BallRegion() = default;
    BallRegion(Vector c, double r) : center(std::move(c)), radius(r) {
        if (std::isnan(radius) || radius < 0.0) {
            throw std::invalid_argument("BallRegion: radius must be >= 0");
        }
    }

    double diameter() const { return 2.0 * radius; }

    bool contains(const Vector& v) const { return distance(v, center) <= radius; }
};

/// Radial projection onto a Euclidean ball: identity inside, scaled back to
/// the sphere outside. The result always satisfies region.contains(), which
/// makes repeated projection the identity bit for bit.
inline Vector project_ball(const Vector& v, const BallRegion& region) {
    if (!is_finite(v)) throw std::invalid_argument("project_ball: non-finite input");
    require_same_size(v, region.center, "project_ball");
    Vector d = sub(v, region.center);
    const double dist = norm(d);
    if (dist <= region.radius) return v;
    double scale = region.radius / dist;
    Vector r = add_scaled(region.center, scale, d);
    // rounding can leave the scaled point outside by a few ulps; nudge inward
    for (int i = 0; i < 32 && distance(r, region.center) > region.radius; ++i) {
        scale *= 1.0 - 4.0 * std::numeric_limits<double>::epsilon();
        r = add_scaled(region.center, scale, d);
    }
    return r;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Fixed seed-mixing function used to derive independent substreams
/// (per time step, per trial) from one run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
    return splitmix64(seed ^ splitmix64(k));
}

/// Seeded pseudo-random generator. Identical seed gives an identical sample
/// stream within one build. Single-owner: never share one instance across
/// threads, derive substreams with mix_seed instead.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::mt19937_64& engine() { return engine_; }

    double normal(double mean = 0.0, double stddev = 1.0) {
        if (stddev < 0.0) throw std::invalid_argument("SeededRng::normal: stddev < 0");
        if (stddev == 0.0) return mean;
        std::normal_distribution<double> dist(mean, stddev);
        return dist(engine_);
    }

    /// Uniform on [0, 1).
    double uniform() {
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        return dist(engine_);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// n i.i.d. draws from Normal(mean, std^2). std = 0 yields the constant
/// vector without consuming generator state.
inline Vector gaussian_vector(SeededRng& rng, std::size_t n, double mean = 0.0, double stddev = 1.0) {
    if (n < 1) throw std::invalid_argument("gaussian_vector: n must be >= 1");
    if (!(stddev >= 0.0)) throw std::invalid_argument("gaussian_vector: std must be >= 0");
    Vector v(n, mean);
    if (stddev == 0.0) return v;
    std::normal_distribution<double> dist(mean, stddev);
    for (std::size_t i = 0; i < n; ++i) v[i] = dist(rng.engine());
    return v;
}

}  // namespace quasar
