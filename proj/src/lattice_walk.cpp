#include "walktrace/lattice_walk.hpp"

#include <bit>
#include <cassert>
#include <cmath>
#include <cstdlib>
#include <string>

#include "walktrace/error.hpp"

namespace walktrace {

namespace {

void check_dimension(int d) {
    if (d < 1 || d > kMaxDimension)
        throw ParameterError("dimension must lie in [1, " + std::to_string(kMaxDimension) + "], got " +
                             std::to_string(d));
}

}  // namespace

LatticePoint::LatticePoint(int dim) : d(dim) { check_dimension(dim); }

LatticePoint::LatticePoint(std::initializer_list<std::int32_t> c) : d(static_cast<int>(c.size())) {
    check_dimension(d);
    std::size_t i = 0;
    for (auto v : c) coords[i++] = v;
}

std::int64_t LatticePoint::l1_norm() const noexcept {
    std::int64_t s = 0;
    for (int i = 0; i < d; ++i) s += std::abs(static_cast<std::int64_t>(coords[static_cast<std::size_t>(i)]));
    return s;
}

KeyPacking::KeyPacking(int d) : d_(d) {
    check_dimension(d);
    bits_ = 64 / d;
    // Keep every biased field strictly below all-ones so the packed key can
    // never collide with the hash table's empty marker.
    const std::uint64_t half = std::uint64_t{1} << (bits_ - 1);
    limit_ = static_cast<std::int64_t>(std::min<std::uint64_t>(half - 2, std::uint64_t{0x7FFFFFFF}));
    origin_ = 0;
    for (int i = 0; i < d; ++i) origin_ += half << (bits_ * i);
    for (int i = 0; i < d; ++i) {
        const std::uint64_t unit = std::uint64_t{1} << (bits_ * i);
        deltas_[static_cast<std::size_t>(2 * i)] = unit;
        deltas_[static_cast<std::size_t>(2 * i + 1)] = ~unit + 1;  // -unit modulo 2^64
    }
}

std::uint64_t KeyPacking::pack(const LatticePoint& p) const {
    std::uint64_t key = origin_;
    for (int i = 0; i < d_; ++i) {
        const std::int64_t c = p[i];
        if (c > limit_ || c < -limit_) throw CapacityError("lattice coordinate outside packable range");
        key += static_cast<std::uint64_t>(c) << (bits_ * i);
    }
    return key;
}

StepSource::StepSource(int d, std::uint64_t seed)
    : engine_(seed),
      bits_per_draw_(std::bit_width(static_cast<unsigned>(2 * d - 1))),
      directions_(2 * d),
      mask_((std::uint64_t{1} << std::bit_width(static_cast<unsigned>(2 * d - 1))) - 1) {
    check_dimension(d);
}

Walker::Walker(int d, std::uint64_t seed)
    : packing_(d), source_(d, seed), position_(d), key_(packing_.origin_key()) {}

std::uint64_t Walker::step() {
    const int dir = source_.next_direction();
    const int axis = dir >> 1;
    const std::int32_t next = position_[axis] + ((dir & 1) ? -1 : 1);
    if (next > packing_.coordinate_limit() || next < -packing_.coordinate_limit())
        throw CapacityError("walk left the packable coordinate range");
    position_[axis] = next;
    key_ += packing_.step_delta(dir);
    return key_;
}

WalkPath::WalkPath(int d, std::uint64_t seed) : d_(d), seed_(seed), packing_(d) {}

WalkPath WalkPath::from_points(const std::vector<LatticePoint>& points) {
    if (points.empty()) throw ParameterError("path needs at least one point");
    WalkPath path(points.front().d);
    path.reserve(points.size());
    for (const auto& p : points) {
        if (p.d != path.d_) throw ParameterError("mixed dimensions in path");
        path.push_back(p);
    }
    if (!path.is_nearest_neighbour()) throw ParameterError("consecutive points must differ by one unit step");
    return path;
}

WalkPath WalkPath::from_directions(int d, std::span<const int> directions) {
    WalkPath path(d);
    path.reserve(directions.size() + 1);
    LatticePoint p(d);
    path.push_back(p);
    for (int dir : directions) {
        if (dir < 0 || dir >= 2 * d) throw ParameterError("direction code out of range");
        p[dir >> 1] += (dir & 1) ? -1 : 1;
        path.push_back(p);
    }
    return path;
}

LatticePoint WalkPath::point(std::size_t j) const {
    LatticePoint p(d_);
    for (int i = 0; i < d_; ++i) p[i] = coord(j, i);
    return p;
}

bool WalkPath::is_nearest_neighbour() const noexcept {
    for (std::size_t j = 1; j < size(); ++j) {
        std::int64_t dist = 0;
        for (int i = 0; i < d_; ++i) dist += std::abs(static_cast<std::int64_t>(coord(j, i)) - coord(j - 1, i));
        if (dist != 1) return false;
    }
    return true;
}

void WalkPath::reserve(std::size_t points) {
    coords_.reserve(points * static_cast<std::size_t>(d_));
    keys_.reserve(points);
}

void WalkPath::push_back(const LatticePoint& p) {
    keys_.push_back(packing_.pack(p));
    for (int i = 0; i < d_; ++i) coords_.push_back(p[i]);
}

WalkPath generate_walk(int d, std::int64_t n, std::uint64_t seed, std::int64_t step_budget) {
    check_dimension(d);
    if (n < 0) throw ParameterError("step count must be nonnegative");
    if (n > step_budget)
        throw CapacityError("walk of " + std::to_string(n) + " steps exceeds budget of " +
                            std::to_string(step_budget));

    WalkPath path(d, seed);
    const auto points = static_cast<std::size_t>(n) + 1;
    path.coords_.resize(points * static_cast<std::size_t>(d));
    path.keys_.resize(points);

    const KeyPacking& packing = path.packing_;
    const std::int64_t limit = packing.coordinate_limit();
    StepSource source(d, seed);
    std::int32_t* coords = path.coords_.data();
    std::uint64_t key = packing.origin_key();
    path.keys_[0] = key;
    for (std::size_t j = 1; j < points; ++j) {
        const int dir = source.next_direction();
        const int axis = dir >> 1;
        std::int32_t* prev = coords + (j - 1) * static_cast<std::size_t>(d);
        std::int32_t* cur = prev + d;
        for (int i = 0; i < d; ++i) cur[i] = prev[i];
        cur[axis] += (dir & 1) ? -1 : 1;
        if (cur[axis] > limit || cur[axis] < -limit) throw CapacityError("walk left the packable coordinate range");
        key += packing.step_delta(dir);
        path.keys_[j] = key;
    }
    assert(path.is_nearest_neighbour());
    return path;
}

KillingTime sample_killing_time(double lambda, StepSource& source) {
    if (!(lambda >= 0.0) || lambda >= 1.0) throw ParameterError("killing parameter lambda must lie in [0, 1)");
    if (lambda == 0.0) return {0, lambda};
    // Inversion: P(T >= j) = P(U <= lambda^j) = lambda^j.
    const double u = source.next_unit();
    const double t = std::floor(std::log(u) / std::log(lambda));
    return {static_cast<std::int64_t>(t), lambda};
}

KillingTime sample_killing_time(double lambda, std::uint64_t seed) {
    StepSource source(kDefaultDimension, seed);
    return sample_killing_time(lambda, source);
}

}  // namespace walktrace
