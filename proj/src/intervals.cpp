#include "ivs/intervals.hpp"

namespace ivs {

TranslationMap::TranslationMap(Duration offset, Duration source_len, Duration target_len)
    : offset(std::move(offset)), source_len(std::move(source_len)), target_len(std::move(target_len)) {
    require_duration(this->offset, "translation offset");
    require_duration(this->source_len, "translation source length");
    require_duration(this->target_len, "translation target length");
    if (this->offset + this->source_len > this->target_len) {
        throw Error("translation [0," + this->source_len.str() + "] +" + this->offset.str() +
                    " does not fit inside [0," + this->target_len.str() + "]");
    }
}

TranslationMap identity_translation(Duration len) {
    return TranslationMap(Duration(0), len, std::move(len));
}

TranslationMap compose_translations(const TranslationMap& outer, const TranslationMap& inner) {
    if (inner.target_len != outer.source_len) {
        throw CompositionError("translations do not compose: inner lands in [0," +
                               inner.target_len.str() + "] but outer expects [0," +
                               outer.source_len.str() + "]");
    }
    return TranslationMap(outer.offset + inner.offset, inner.source_len, outer.target_len);
}

std::pair<Duration, Duration> window(const TranslationMap& t) {
    return {t.left(), t.right()};
}

}  // namespace ivs
