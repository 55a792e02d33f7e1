#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace walktrace {

inline constexpr int kDefaultDimension = 4;
inline constexpr int kMaxDimension = 8;

/// Default ceiling on the number of steps a single stored path may hold.
inline constexpr std::int64_t kDefaultStepBudget = std::int64_t{1} << 26;

/// SplitMix64 finalizer; the seed-derivation primitive.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of the `index`-th child stream of `master`. Pure function, so trial
/// results never depend on which worker ran them or in what order.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Point of Z^d with d <= kMaxDimension.
struct LatticePoint {
    std::array<std::int32_t, kMaxDimension> coords{};
    int d = kDefaultDimension;

    LatticePoint() = default;
    explicit LatticePoint(int dim);
    LatticePoint(std::initializer_list<std::int32_t> c);

    [[nodiscard]] std::int64_t l1_norm() const noexcept;
    /// The relation "0 <-> x": coordinate sum even.
    [[nodiscard]] bool even() const noexcept { return (l1_norm() & 1) == 0; }

    std::int32_t& operator[](int i) noexcept { return coords[static_cast<std::size_t>(i)]; }
    std::int32_t operator[](int i) const noexcept { return coords[static_cast<std::size_t>(i)]; }

    friend bool operator==(const LatticePoint& a, const LatticePoint& b) noexcept {
        if (a.d != b.d) return false;
        for (int i = 0; i < a.d; ++i)
            if (a[i] != b[i]) return false;
        return true;
    }
};

/// Injective packing of a lattice point into 64 bits: 64/d bits per
/// coordinate, each biased by half its range. Points whose coordinates do not
/// fit raise CapacityError at walk generation time.
class KeyPacking {
public:
    explicit KeyPacking(int d);

    [[nodiscard]] int dimension() const noexcept { return d_; }
    [[nodiscard]] std::int64_t coordinate_limit() const noexcept { return limit_; }
    [[nodiscard]] std::uint64_t origin_key() const noexcept { return origin_; }
    [[nodiscard]] std::uint64_t pack(const LatticePoint& p) const;
    /// Key delta for unit step `direction` in [0, 2d): axis direction/2,
    /// negative when direction is odd.
    [[nodiscard]] std::uint64_t step_delta(int direction) const noexcept {
        return deltas_[static_cast<std::size_t>(direction)];
    }

private:
    int d_;
    int bits_;
    std::int64_t limit_;
    std::uint64_t origin_;
    std::array<std::uint64_t, 2 * kMaxDimension> deltas_{};
};

/// Uniform source of nearest-neighbour directions over a seeded
/// std::mt19937_64. Draws use raw engine bits with rejection, so the stream
/// is identical on every conforming standard library.
class StepSource {
public:
    StepSource(int d, std::uint64_t seed);

    [[nodiscard]] int next_direction() noexcept {
        while (true) {
            if (bits_left_ < bits_per_draw_) {
                buffer_ = engine_();
                bits_left_ = 64;
            }
            const int dir = static_cast<int>(buffer_ & mask_);
            buffer_ >>= bits_per_draw_;
            bits_left_ -= bits_per_draw_;
            if (dir < directions_) return dir;
        }
    }

    /// Uniform double in (0, 1].
    [[nodiscard]] double next_unit() noexcept {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t buffer_ = 0;
    int bits_left_ = 0;
    int bits_per_draw_;
    int directions_;
    std::uint64_t mask_;
};

/// Streaming simple random walk: position and packed key, advanced one step
/// at a time without storing history. Used where only membership queries
/// against other walks are needed.
class Walker {
public:
    Walker(int d, std::uint64_t seed);

    /// Advances one step and returns the new packed key.
    std::uint64_t step();

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
    [[nodiscard]] const LatticePoint& position() const noexcept { return position_; }
    [[nodiscard]] const KeyPacking& packing() const noexcept { return packing_; }
    StepSource& source() noexcept { return source_; }

private:
    KeyPacking packing_;
    StepSource source_;
    LatticePoint position_;
    std::uint64_t key_;
};

class WalkPath;
WalkPath generate_walk(int d, std::int64_t n, std::uint64_t seed, std::int64_t step_budget);

/// Finite nearest-neighbour trajectory S(0..n) on Z^d. Coordinates are kept
/// flat (point-major) together with their packed keys.
class WalkPath {
public:
    WalkPath() : WalkPath(kDefaultDimension) {}
    explicit WalkPath(int d, std::uint64_t seed = 0);

    /// Builds a path from explicit points; throws ParameterError unless every
    /// consecutive pair is a unit step.
    static WalkPath from_points(const std::vector<LatticePoint>& points);
    /// Builds a path from the origin following direction codes in [0, 2d).
    static WalkPath from_directions(int d, std::span<const int> directions);

    [[nodiscard]] int dimension() const noexcept { return d_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    /// Number of points, n + 1.
    [[nodiscard]] std::size_t size() const noexcept { return keys_.size(); }
    /// Number of steps, n.
    [[nodiscard]] std::int64_t steps() const noexcept { return static_cast<std::int64_t>(keys_.size()) - 1; }

    [[nodiscard]] LatticePoint point(std::size_t j) const;
    [[nodiscard]] std::int32_t coord(std::size_t j, int axis) const noexcept {
        return coords_[j * static_cast<std::size_t>(d_) + static_cast<std::size_t>(axis)];
    }
    [[nodiscard]] std::uint64_t key(std::size_t j) const noexcept { return keys_[j]; }
    [[nodiscard]] std::span<const std::uint64_t> keys() const noexcept { return keys_; }
    [[nodiscard]] const KeyPacking& packing() const noexcept { return packing_; }

    /// Checks the unit-step invariant over the whole path.
    [[nodiscard]] bool is_nearest_neighbour() const noexcept;

    void reserve(std::size_t points);
    void push_back(const LatticePoint& p);

private:
    friend WalkPath generate_walk(int, std::int64_t, std::uint64_t, std::int64_t);

    int d_;
    std::uint64_t seed_;
    KeyPacking packing_;
    std::vector<std::int32_t> coords_;
    std::vector<std::uint64_t> keys_;
};

/// Seeded n-step simple random walk from the origin. Equal (d, n, seed)
/// give bit-identical paths. Throws CapacityError when n exceeds
/// `step_budget`, ParameterError for n < 0 or d outside [1, kMaxDimension].
[[nodiscard]] WalkPath generate_walk(int d, std::int64_t n, std::uint64_t seed,
                                     std::int64_t step_budget = kDefaultStepBudget);

/// Geometric time on {0,1,2,...} with P(T = j) = (1 - lambda) lambda^j.
struct KillingTime {
    std::int64_t value = 0;
    double lambda = 0.0;
};

[[nodiscard]] KillingTime sample_killing_time(double lambda, std::uint64_t seed);
/// Same law, drawing from an existing stream.
[[nodiscard]] KillingTime sample_killing_time(double lambda, StepSource& source);

}  // namespace walktrace
