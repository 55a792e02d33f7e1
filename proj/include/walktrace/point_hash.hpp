#pragma once

#include <bit>
#include <cstdint>
#include <vector>

namespace walktrace {

/// Fixed multiplicative mixing of a packed lattice key.
[[nodiscard]] inline std::uint64_t mix_key(std::uint64_t key) noexcept {
    key ^= key >> 31;
    key *= 0x9E3779B97F4A7C15ULL;
    key ^= key >> 29;
    return key;
}

/// Open-addressing map from packed point keys to dense 32-bit ids.
///
/// Keys are the packed coordinates produced by `WalkPath`; packing is
/// injective, so two distinct lattice points never share a key. The table
/// is reusable: `reset(expected)` clears it without releasing memory when the
/// capacity already suffices, which keeps Monte Carlo loops allocation-free.
class PointIndex {
public:
    static constexpr std::uint32_t npos = 0xFFFFFFFFu;

    PointIndex() = default;
    explicit PointIndex(std::size_t expected) { reset(expected); }

    void reset(std::size_t expected) {
        std::size_t want = std::bit_ceil(std::max<std::size_t>(16, 2 * expected + 2));
        if (want > keys_.size()) {
            keys_.assign(want, kEmpty);
            values_.assign(want, npos);
        } else {
            std::fill(keys_.begin(), keys_.end(), kEmpty);
        }
        mask_ = keys_.size() - 1;
        size_ = 0;
    }

    /// Returns the id stored for `key`, inserting `next_id` when absent.
    /// `inserted` reports whether the key was new.
    std::uint32_t find_or_insert(std::uint64_t key, std::uint32_t next_id, bool& inserted) {
        std::size_t slot = mix_key(key) & mask_;
        while (true) {
            const std::uint64_t k = keys_[slot];
            if (k == key) {
                inserted = false;
                return values_[slot];
            }
            if (k == kEmpty) {
                keys_[slot] = key;
                values_[slot] = next_id;
                ++size_;
                inserted = true;
                if (2 * size_ > keys_.size()) grow();
                return next_id;
            }
            slot = (slot + 1) & mask_;
        }
    }

    /// Inserts `key` with `id` only if absent; returns true when inserted.
    bool insert(std::uint64_t key, std::uint32_t id = 0) {
        bool inserted = false;
        find_or_insert(key, id, inserted);
        return inserted;
    }

    [[nodiscard]] std::uint32_t find(std::uint64_t key) const noexcept {
        if (keys_.empty()) return npos;
        std::size_t slot = mix_key(key) & mask_;
        while (true) {
            const std::uint64_t k = keys_[slot];
            if (k == key) return values_[slot];
            if (k == kEmpty) return npos;
            slot = (slot + 1) & mask_;
        }
    }

    [[nodiscard]] bool contains(std::uint64_t key) const noexcept { return find(key) != npos; }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }

private:
    // Packed keys always carry the per-coordinate offset, so all-ones never
    // occurs as a real key.
    static constexpr std::uint64_t kEmpty = ~std::uint64_t{0};

    void grow() {
        std::vector<std::uint64_t> old_keys = std::move(keys_);
        std::vector<std::uint32_t> old_values = std::move(values_);
        keys_.assign(old_keys.size() * 2, kEmpty);
        values_.assign(old_keys.size() * 2, npos);
        mask_ = keys_.size() - 1;
        for (std::size_t i = 0; i < old_keys.size(); ++i) {
            if (old_keys[i] == kEmpty) continue;
            std::size_t slot = mix_key(old_keys[i]) & mask_;
            while (keys_[slot] != kEmpty) slot = (slot + 1) & mask_;
            keys_[slot] = old_keys[i];
            values_[slot] = old_values[i];
        }
    }

    std::vector<std::uint64_t> keys_;
    std::vector<std::uint32_t> values_;
    std::size_t mask_ = 0;
    std::size_t size_ = 0;
};

}  // namespace walktrace
