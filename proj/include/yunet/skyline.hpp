#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "yunet/image.hpp"
#include "yunet/model.hpp"

namespace yunet {

struct LetterboxRecord;

/// One row index per column: the first non-sky row scanning down from the top.
struct SkylineVector {
    static constexpr int kUndefined = -1;

    int height = 0;
    int width = 0;
    std::vector<int> rows;

    bool defined(int column) const { return rows[column] != kUndefined; }
    SkylineVector reversed() const;

    /// `width,height,r0,...,r{W-1}` with -1 for undefined columns.
    std::string to_csv_line() const;
    static SkylineVector from_csv_line(std::string_view line);

    bool operator==(const SkylineVector&) const = default;
};

enum class EdgeMethod { canny, sobel };
/// How a skyline is read off a mask: direct column scan or topmost edge pixel.
enum class SkylineMethod { scan, sobel, canny };

std::string_view to_string(EdgeMethod m);
std::string_view to_string(SkylineMethod m);
SkylineMethod parse_skyline_method(std::string_view name);

struct EdgeParams {
    double sobel_threshold = 0.0;  // on gradient magnitude / max magnitude
    double canny_sigma = 1.0;
    double canny_low = 0.1;
    double canny_high = 0.2;
};

/// Binary edge map. Boundary pixels are assigned to the non-sky side of each
/// sky/non-sky transition, so the topmost edge pixel of a column is its skyline row.
struct EdgeMap {
    int height = 0;
    int width = 0;
    EdgeMethod method = EdgeMethod::sobel;
    std::vector<std::uint8_t> values;

    std::uint8_t at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
};

EdgeMap edge_map(const BinaryMask& mask, EdgeMethod method, const EdgeParams& params = {});

SkylineVector skyline_from_mask(const BinaryMask& mask);

/// Topmost edge pixel per column; columns without edges fall back to the column scan.
SkylineVector skyline_from_edges(const EdgeMap& edges, const BinaryMask& mask);

SkylineVector extract_skyline(const BinaryMask& mask, SkylineMethod method, const EdgeParams& params = {});

SkylineVector skyline_from_prediction(const Network& net, const Tensor& image, double threshold,
                                      const LetterboxRecord* letterbox = nullptr);

/// Copy of the image with the skyline drawn as a red polyline.
RgbImage render_skyline_overlay(const RgbImage& image, const SkylineVector& skyline);

} // namespace yunet
