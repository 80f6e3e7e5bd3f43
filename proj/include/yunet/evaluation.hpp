#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "yunet/data.hpp"
#include "yunet/metrics.hpp"
#include "yunet/model.hpp"
#include "yunet/skyline.hpp"

namespace yunet {

struct SegmentationRow {
    std::string id;
    SegmentationCounts counts;
    SegmentationMetrics metrics;
};

/// Micro-averaged: counts are summed over every pixel of every image before the ratios.
struct SegmentationReport {
    SegmentationCounts total;
    SegmentationMetrics metrics;
    std::vector<SegmentationRow> rows;
};

struct SkylineRow {
    std::string id;
    PadResult pad;
};

struct SkylineReport {
    SkylineMethod method = SkylineMethod::sobel;
    std::optional<PadAggregate> aggregate;  // empty when every image was excluded
    std::vector<SkylineRow> rows;
    std::vector<std::string> excluded;      // images without mutually defined columns
};

struct MaskPair {
    std::string id;
    BinaryMask pred;
    BinaryMask gt;
};

SegmentationReport evaluate_segmentation(const std::vector<MaskPair>& pairs);
SkylineReport evaluate_skyline(const std::vector<MaskPair>& pairs, SkylineMethod method,
                               const EdgeParams& params = {});

/// Predicted/ground-truth masks for every sample, cropped to the letterbox content.
std::vector<MaskPair> predict_pairs(const Network& net, const Dataset& data, double threshold);

SegmentationReport evaluate_segmentation(const Network& net, const Dataset& data, double threshold);
SkylineReport evaluate_skyline(const Network& net, const Dataset& data, SkylineMethod method, double threshold,
                               const EdgeParams& params = {});

// Report output.
std::string segmentation_csv(const SegmentationReport& report);
std::string skyline_csv(const SkylineReport& report);
/// JSON summary; keys follow the segmentation and skyline table columns.
std::string summary_json(const SegmentationReport* seg, const SkylineReport* sky, const std::string& dataset);
/// Plain-text tables laid out like the published comparison tables.
std::string segmentation_table(const SegmentationReport& report, const std::string& method_name);
std::string skyline_table(const SkylineReport& report, const std::string& method_name);
/// Histogram PNG of the given values.
void write_histogram_png(const std::vector<double>& values, const std::string& title,
                         const std::filesystem::path& path);

} // namespace yunet
