#include "yunet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "yunet/error.hpp"

namespace yunet {

SegmentationCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.height != gt.height || pred.width != gt.width) {
        throw ShapeError("prediction " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                         " and ground truth " + std::to_string(gt.height) + "x" + std::to_string(gt.width) +
                         " differ in size");
    }
    pred.require_binary("prediction");
    gt.require_binary("ground truth");
    SegmentationCounts c;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const bool p = pred.values[i] != 0;
        const bool g = gt.values[i] != 0;
        if (p && g) ++c.tp;
        else if (p) ++c.fp;
        else if (g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

SegmentationMetrics segmentation_metrics(const SegmentationCounts& c) {
    const std::uint64_t total = c.total();
    if (total == 0) throw DataError("cannot derive metrics from zero pixels");
    SegmentationMetrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.iou = ratio(c.tp, c.tp + c.fp + c.fn);
    m.dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    m.mcr = 1.0 - m.accuracy;
    return m;
}

PadResult pad(const SkylineVector& pred, const SkylineVector& gt) {
    if (pred.width != gt.width || pred.height != gt.height ||
        pred.rows.size() != gt.rows.size()) {
        throw ShapeError("skyline vectors differ in size: " + std::to_string(pred.width) + "x" +
                         std::to_string(pred.height) + " vs " + std::to_string(gt.width) + "x" +
                         std::to_string(gt.height));
    }
    PadResult r;
    long long sum = 0;
    for (std::size_t i = 0; i < pred.rows.size(); ++i) {
        if (pred.rows[i] == SkylineVector::kUndefined || gt.rows[i] == SkylineVector::kUndefined) {
            ++r.skipped_columns;
            continue;
        }
        sum += std::llabs(static_cast<long long>(pred.rows[i]) - gt.rows[i]);
        ++r.evaluated_columns;
    }
    if (r.evaluated_columns == 0) throw NoOverlapError("no column is defined in both skyline vectors");
    r.e = static_cast<double>(sum) / r.evaluated_columns;
    return r;
}

PadAggregate aggregate_pad(std::span<const PadResult> results) {
    if (results.empty()) throw DataError("cannot aggregate an empty PAD list");
    PadAggregate a;
    a.count = results.size();
    a.min = results.front().e;
    a.max = results.front().e;
    double sum = 0.0;
    for (const auto& r : results) {
        sum += r.e;
        a.min = std::min(a.min, r.e);
        a.max = std::max(a.max, r.e);
    }
    a.mu = sum / static_cast<double>(results.size());
    double var = 0.0;
    for (const auto& r : results) var += (r.e - a.mu) * (r.e - a.mu);
    a.sigma = std::sqrt(var / static_cast<double>(results.size()));
    // Keep min <= mu <= max under rounding.
    a.mu = std::clamp(a.mu, a.min, a.max);
    return a;
}

} // namespace yunet
