#pragma once

#include <cstdint>
#include <utility>

#include "ivs/rational.hpp"

namespace ivs {

// A translation of the interval [0, source_len] into [0, target_len],
// x |-> x + offset. Valid when 0 <= offset <= target_len - source_len.
// These are the only maps between intervals; everything that can be done
// to a behavior is built from them.
struct TranslationMap {
    Duration offset;      // p
    Duration source_len;  // length of the domain interval
    Duration target_len;  // length of the codomain interval

    TranslationMap(Duration offset, Duration source_len, Duration target_len);

    // Lengths left of and right of the image window inside the target:
    // left + source_len + right == target_len exactly.
    Duration left() const { return offset; }
    Duration right() const { return target_len - (offset + source_len); }

    bool is_identity() const { return offset.is_zero() && source_len == target_len; }

    bool operator==(const TranslationMap& o) const {
        return offset == o.offset && source_len == o.source_len && target_len == o.target_len;
    }
};

// Identity on [0, len].
TranslationMap identity_translation(Duration len);

// outer after inner; requires inner.target_len == outer.source_len.
// Offsets add: translating by p' into an interval then by p translates by p+p'.
TranslationMap compose_translations(const TranslationMap& outer, const TranslationMap& inner);

// The (p, q) decomposition of a translation: how much of the target interval
// lies to the left and to the right of the image window.
std::pair<Duration, Duration> window(const TranslationMap& t);

// Number of steps of a discrete interval.
using DiscreteLength = std::uint32_t;

}  // namespace ivs
