#include <doctest.h>

#include <random>

#include "ivs/intervals.hpp"

using ivs::compose_translations;
using ivs::Duration;
using ivs::identity_translation;
using ivs::Rational;
using ivs::TranslationMap;

TEST_CASE("translations: composition adds offsets") {
    // [0,2] +3 into [0,6], then [0,6] +2 into [0,9] lands [0,2] at +5.
    TranslationMap inner(Rational(3), Rational(2), Rational(6));
    TranslationMap outer(Rational(2), Rational(6), Rational(9));
    TranslationMap got = compose_translations(outer, inner);
    CHECK(got.offset == Rational(5));
    CHECK(got.source_len == Rational(2));
    CHECK(got.target_len == Rational(9));
}

TEST_CASE("translations: identity composes neutrally") {
    CHECK(identity_translation(Rational(0)).is_identity());
    TranslationMap id5 = identity_translation(Rational(5));
    CHECK(id5.offset == Rational(0));
    CHECK(id5.source_len == Rational(5));

    std::mt19937 rng(11);
    std::uniform_int_distribution<std::int64_t> num(0, 40);
    std::uniform_int_distribution<std::int64_t> den(1, 8);
    for (int i = 0; i < 200; ++i) {
        Duration src(num(rng), den(rng));
        Duration pad(num(rng), den(rng));
        Duration off(num(rng), den(rng));
        Duration tgt = src + pad + off;
        TranslationMap t(off, src, tgt);
        CHECK(compose_translations(identity_translation(tgt), t) == t);
        CHECK(compose_translations(t, identity_translation(src)) == t);
    }
}

TEST_CASE("translations: mismatched lengths do not compose") {
    TranslationMap a(Rational(1), Rational(1), Rational(3));
    TranslationMap b(Rational(1), Rational(2), Rational(3));
    // a lands in [0,3], but b expects a source of length 2
    CHECK_THROWS_AS(compose_translations(b, a), ivs::CompositionError);
}

TEST_CASE("translations: associativity of composition") {
    std::mt19937 rng(13);
    std::uniform_int_distribution<std::int64_t> num(0, 12);
    std::uniform_int_distribution<std::int64_t> den(1, 6);
    for (int i = 0; i < 200; ++i) {
        Duration l0(num(rng), den(rng));
        Duration p1(num(rng), den(rng));
        Duration p2(num(rng), den(rng));
        Duration p3(num(rng), den(rng));
        Duration l1 = l0 + p1 + Duration(num(rng), den(rng));
        Duration l2 = l1 + p2 + Duration(num(rng), den(rng));
        Duration l3 = l2 + p3 + Duration(num(rng), den(rng));
        TranslationMap t1(p1, l0, l1);
        TranslationMap t2(p2, l1, l2);
        TranslationMap t3(p3, l2, l3);
        auto left = compose_translations(compose_translations(t3, t2), t1);
        auto right = compose_translations(t3, compose_translations(t2, t1));
        CHECK(left == right);
    }
}

TEST_CASE("translations: window decomposition is exact") {
    TranslationMap t(Rational(2), Rational(3), Rational(10));
    auto [p, q] = ivs::window(t);
    CHECK(p == Rational(2));
    CHECK(q == Rational(5));
    CHECK(p + t.source_len + q == t.target_len);

    auto [p0, q0] = ivs::window(identity_translation(Rational(7)));
    CHECK(p0 == Rational(0));
    CHECK(q0 == Rational(0));

    TranslationMap right_end(Rational(7), Rational(0), Rational(7));
    auto [p7, q7] = ivs::window(right_end);
    CHECK(p7 == Rational(7));
    CHECK(q7 == Rational(0));
}
