#include <doctest.h>

#include <random>

#include "support.hpp"
#include "yunet/error.hpp"

using namespace yunet;

TEST_CASE("confusion counts on a hand-built pair") {
    const BinaryMask pred(2, 3, std::vector<std::uint8_t>{1, 1, 0, 0, 1, 0});
    const BinaryMask gt(2, 3, std::vector<std::uint8_t>{1, 0, 0, 1, 1, 1});
    const auto c = confusion_counts(pred, gt);
    CHECK(c == SegmentationCounts{2, 1, 1, 2});
    const auto m = segmentation_metrics(c);
    CHECK(m.accuracy == 0.5);
    CHECK(*m.precision == doctest::Approx(2.0 / 3));
    CHECK(*m.recall == 0.5);
    CHECK(*m.iou == 0.4);
    CHECK(*m.dice == doctest::Approx(4.0 / 7));
    CHECK(m.mcr == 0.5);
}

TEST_CASE("counts match the brute-force oracle") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto p = testing::random_mask(rng, 9, 13, 0.3);
        const auto g = testing::random_mask(rng, 9, 13, 0.7);
        const auto c = confusion_counts(p, g);
        const auto b = testing::brute_counts(p, g);
        CHECK(c.tp == b.tp);
        CHECK(c.fp == b.fp);
        CHECK(c.tn == b.tn);
        CHECK(c.fn == b.fn);
        const auto m = segmentation_metrics(c);
        CHECK(m.accuracy + m.mcr == doctest::Approx(1.0).epsilon(1e-15));
        if (m.iou && m.dice) CHECK(*m.dice == doctest::Approx(2 * *m.iou / (1 + *m.iou)).epsilon(1e-12));
    }
}

TEST_CASE("ratios with empty denominators are absent") {
    const BinaryMask zeros(3, 3, 0);
    const auto m = segmentation_metrics(confusion_counts(zeros, zeros));
    CHECK(m.accuracy == 1.0);
    CHECK_FALSE(m.precision.has_value());
    CHECK_FALSE(m.recall.has_value());
    CHECK_FALSE(m.iou.has_value());
    CHECK_FALSE(m.dice.has_value());
    const BinaryMask ones(3, 3, 1);
    const auto p = segmentation_metrics(confusion_counts(ones, ones));
    CHECK(*p.iou == 1.0);
    CHECK(*p.dice == 1.0);
}

TEST_CASE("metrics reject mismatched or non-binary masks") {
    CHECK_THROWS_AS(confusion_counts(BinaryMask(2, 2), BinaryMask(2, 3)), ShapeError);
    BinaryMask bad(2, 2, 1);
    bad.at(0, 1) = 2;
    CHECK_THROWS_AS(confusion_counts(bad, BinaryMask(2, 2)), DataError);
    CHECK_THROWS_AS(segmentation_metrics(SegmentationCounts{}), DataError);
}

TEST_CASE("PAD by hand with undefined columns excluded") {
    const SkylineVector p{10, 5, {1, 4, -1, 7, 2}};
    const SkylineVector q{10, 5, {3, 4, 5, -1, 0}};
    const PadResult r = pad(p, q);
    // Columns 0, 1, 4: |1-3| + 0 + |2-0| = 4 over 3 columns.
    CHECK(r.e == doctest::Approx(4.0 / 3));
    CHECK(r.evaluated_columns == 3);
    CHECK(r.skipped_columns == 2);
    CHECK(pad(q, p).e == r.e);
    CHECK(pad(p, p).e == 0.0);
}

TEST_CASE("PAD errors") {
    const SkylineVector a{4, 2, {-1, 1}};
    const SkylineVector b{4, 2, {2, -1}};
    CHECK_THROWS_AS(pad(a, b), NoOverlapError);
    CHECK_THROWS_AS(pad(a, SkylineVector{4, 3, {1, 1, 1}}), ShapeError);
}

TEST_CASE("PAD matches the oracle on random vectors") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        const auto a = testing::random_skyline(rng, 1 + i % 40, 30, 0.2);
        const auto b = testing::random_skyline(rng, 1 + i % 40, 30, 0.2);
        const double want = testing::brute_pad(a.rows, b.rows);
        if (std::isnan(want)) {
            CHECK_THROWS_AS(pad(a, b), NoOverlapError);
        } else {
            CHECK(std::abs(pad(a, b).e - want) <= 1e-9);
        }
    }
}

TEST_CASE("aggregate uses the population standard deviation") {
    const std::vector<PadResult> rs{{1.0, 1, 0}, {2.0, 1, 0}, {4.0, 1, 0}, {5.0, 1, 0}};
    const PadAggregate a = aggregate_pad(rs);
    CHECK(a.mu == 3.0);
    CHECK(a.sigma == doctest::Approx(std::sqrt(2.5)));
    CHECK(a.min == 1.0);
    CHECK(a.max == 5.0);
    CHECK(a.count == 4);
    CHECK_THROWS_AS(aggregate_pad({}), DataError);
}
