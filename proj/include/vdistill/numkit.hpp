#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "vdistill/errors.hpp"

namespace vdistill {

// Dense row-major array of 64-bit floats.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s)
        : shape(std::move(s)), data(numel_of(shape), 0.0) {}
    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != data.size()) {
            throw ContractError("Tensor: shape/data size mismatch");
        }
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }

    std::size_t numel() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool operator==(const Tensor& o) const {
        return shape == o.shape && data == o.data;
    }
};

inline bool all_finite(const Tensor& t) {
    for (double v : t.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

inline void require_finite(const Tensor& t, const char* what) {
    if (!all_finite(t)) {
        throw ContractError(std::string(what) + ": non-finite value");
    }
}

// Counter-based RNG. A stream is (seed, key, counter); equal (seed, key)
// gives an identical draw sequence on every platform. Streams are forked
// per (purpose, class, iteration) so work order never perturbs draws.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t key = 0;
    std::uint64_t counter = 0;

    explicit RngStream(std::uint64_t seed_ = 0) : seed(seed_) {}
    RngStream(std::uint64_t seed_, std::uint64_t key_) : seed(seed_), key(key_) {}

    static std::uint64_t mix(std::uint64_t x) {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    static std::uint64_t hash_tag(const std::string& tag) {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (unsigned char c : tag) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    // Derive an independent stream keyed by (purpose tag, class id, iteration).
    RngStream fork(const std::string& purpose, std::uint64_t class_id = 0,
                   std::uint64_t iteration = 0) const {
        std::uint64_t k = key;
        k = mix(k ^ hash_tag(purpose));
        k = mix(k ^ class_id);
        k = mix(k ^ iteration);
        return RngStream(seed, k);
    }

    std::uint64_t next_u64() {
        std::uint64_t x = mix(seed ^ mix(key ^ counter));
        ++counter;
        return x;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    std::uint64_t next_index(std::uint64_t n) {
        if (n == 0) throw ContractError("RngStream::next_index: n == 0");
        return static_cast<std::uint64_t>(next_double() * static_cast<double>(n)) % n;
    }

    double next_normal() {
        // Box-Muller; one value per call keeps the counter bookkeeping trivial.
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }
};

inline Tensor uniform(RngStream& rng, double lo, double hi,
                      std::vector<std::size_t> shape) {
    if (!(lo < hi)) throw ContractError("uniform: require lo < hi");
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        throw ContractError("uniform: bounds must be finite");
    }
    Tensor out(std::move(shape));
    for (double& v : out.data) v = lo + (hi - lo) * rng.next_double();
    return out;
}

// SGD with classical momentum: v' = m*v + g; p' = p - lr*v'.
struct SgdState {
    double learning_rate = 0.01;
    double momentum = 0.0;
    Tensor velocity;

    SgdState() = default;
    SgdState(double lr, double m, std::vector<std::size_t> shape)
        : learning_rate(lr), momentum(m), velocity(std::move(shape)) {
        if (m < 0.0 || m >= 1.0) throw ContractError("SgdState: momentum outside [0,1)");
    }
};

inline void sgd_step(Tensor& params, const Tensor& grad, SgdState& state) {
    if (!params.same_shape(grad) || !params.same_shape(state.velocity)) {
        throw ContractError("sgd_step: shape mismatch");
    }
    require_finite(grad, "sgd_step grad");
    for (std::size_t i = 0; i < params.numel(); ++i) {
        double v = state.momentum * state.velocity.data[i] + grad.data[i];
        state.velocity.data[i] = v;
        params.data[i] -= state.learning_rate * v;
    }
    require_finite(params, "sgd_step params");
}

}  // namespace vdistill
