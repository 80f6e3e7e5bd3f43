#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "yunet/image.hpp"
#include "yunet/skyline.hpp"

namespace yunet {

/// Pixel confusion counts with sky as the positive class.
struct SegmentationCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    SegmentationCounts& operator+=(const SegmentationCounts& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
    bool operator==(const SegmentationCounts&) const = default;
};

/// Ratios in [0,1]. A ratio with a zero denominator is std::nullopt.
struct SegmentationMetrics {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> dice;
    std::optional<double> iou;
    double mcr = 0.0;  // misclassification rate, 1 - accuracy
};

SegmentationCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt);
SegmentationMetrics segmentation_metrics(const SegmentationCounts& counts);

/// Mean absolute row error over columns defined in both vectors.
struct PadResult {
    double e = 0.0;
    int evaluated_columns = 0;
    int skipped_columns = 0;
};

struct PadAggregate {
    double mu = 0.0;
    double sigma = 0.0;  // population standard deviation
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

PadResult pad(const SkylineVector& pred, const SkylineVector& gt);
PadAggregate aggregate_pad(std::span<const PadResult> results);

} // namespace yunet
