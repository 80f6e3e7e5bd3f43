#include "yunet/skyline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "yunet/data.hpp"
#include "yunet/error.hpp"
#include "yunet/training.hpp"

namespace yunet {

SkylineVector SkylineVector::reversed() const {
    SkylineVector out = *this;
    std::reverse(out.rows.begin(), out.rows.end());
    return out;
}

std::string SkylineVector::to_csv_line() const {
    std::string line = std::to_string(width) + "," + std::to_string(height);
    for (int r : rows) line += "," + std::to_string(r);
    return line;
}

SkylineVector SkylineVector::from_csv_line(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
    std::vector<int> fields;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t end = line.find(',', pos);
        if (end == std::string_view::npos) end = line.size();
        std::string_view tok = line.substr(pos, end - pos);
        while (!tok.empty() && (tok.back() == '\r' || tok.back() == ' ')) tok.remove_suffix(1);
        while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
        int v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) {
            throw DataError("malformed skyline CSV field '" + std::string(tok) + "'");
        }
        fields.push_back(v);
        pos = end + 1;
    }
    if (fields.size() < 2) throw DataError("skyline CSV line needs width and height");
    SkylineVector s;
    s.width = fields[0];
    s.height = fields[1];
    s.rows.assign(fields.begin() + 2, fields.end());
    if (s.width < 1 || static_cast<int>(s.rows.size()) != s.width) {
        throw DataError("skyline CSV line declares width " + std::to_string(s.width) + " but holds " +
                        std::to_string(s.rows.size()) + " entries");
    }
    for (int r : s.rows) {
        if (r != kUndefined && (r < 0 || r >= s.height)) throw DataError("skyline row out of range");
    }
    return s;
}

std::string_view to_string(EdgeMethod m) {
    return m == EdgeMethod::canny ? "canny" : "sobel";
}

std::string_view to_string(SkylineMethod m) {
    switch (m) {
    case SkylineMethod::scan: return "scan";
    case SkylineMethod::sobel: return "sobel";
    case SkylineMethod::canny: return "canny";
    }
    return "?";
}

SkylineMethod parse_skyline_method(std::string_view name) {
    for (SkylineMethod m : {SkylineMethod::scan, SkylineMethod::sobel, SkylineMethod::canny}) {
        if (to_string(m) == name) return m;
    }
    throw ConfigError("unknown skyline method '" + std::string(name) + "'; expected one of {canny,sobel,scan}");
}

namespace {

void check_mask(const BinaryMask& mask) {
    if (mask.width < 1 || mask.height < 1) throw DataError("mask has zero width or height");
    mask.require_binary();
}

// Replicate-border 3x3 Sobel on a row-major field.
void sobel(const std::vector<double>& f, int h, int w, std::vector<double>& gx, std::vector<double>& gy) {
    gx.assign(f.size(), 0.0);
    gy.assign(f.size(), 0.0);
    auto at = [&](int r, int c) {
        r = std::clamp(r, 0, h - 1);
        c = std::clamp(c, 0, w - 1);
        return f[static_cast<std::size_t>(r) * w + c];
    };
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t k = static_cast<std::size_t>(r) * w + c;
            gx[k] = (at(r - 1, c + 1) + 2 * at(r, c + 1) + at(r + 1, c + 1)) -
                    (at(r - 1, c - 1) + 2 * at(r, c - 1) + at(r + 1, c - 1));
            gy[k] = (at(r + 1, c - 1) + 2 * at(r + 1, c) + at(r + 1, c + 1)) -
                    (at(r - 1, c - 1) + 2 * at(r - 1, c) + at(r - 1, c + 1));
        }
    }
}

std::vector<double> gaussian_blur(const std::vector<double>& f, int h, int w, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;
    std::vector<double> tmp(f.size(), 0.0);
    std::vector<double> out(f.size(), 0.0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                acc += kernel[i + radius] * f[static_cast<std::size_t>(r) * w + std::clamp(c + i, 0, w - 1)];
            }
            tmp[static_cast<std::size_t>(r) * w + c] = acc;
        }
    }
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                acc += kernel[i + radius] * tmp[static_cast<std::size_t>(std::clamp(r + i, 0, h - 1)) * w + c];
            }
            out[static_cast<std::size_t>(r) * w + c] = acc;
        }
    }
    return out;
}

std::vector<double> as_field(const BinaryMask& mask) {
    return {mask.values.begin(), mask.values.end()};
}

// Snaps a detector response onto the boundary: a non-sky pixel with a sky
// 4-neighbor is an edge when the detector fired within `radius` of it.
// Smoothing and thinning can move the response off the transition.
std::vector<std::uint8_t> snap_to_boundary(const std::vector<std::uint8_t>& raw, const BinaryMask& mask,
                                           int radius) {
    const int h = mask.height;
    const int w = mask.width;
    auto fired = [&](int r, int c) {
        for (int dr = -radius; dr <= radius; ++dr) {
            for (int dc = -radius; dc <= radius; ++dc) {
                const int rr = r + dr;
                const int cc = c + dc;
                if (rr >= 0 && rr < h && cc >= 0 && cc < w && raw[static_cast<std::size_t>(rr) * w + cc]) return true;
            }
        }
        return false;
    };
    std::vector<std::uint8_t> out(raw.size(), 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (mask.at(r, c) != 0) continue;
            const bool boundary = (r > 0 && mask.at(r - 1, c)) || (r + 1 < h && mask.at(r + 1, c)) ||
                                  (c > 0 && mask.at(r, c - 1)) || (c + 1 < w && mask.at(r, c + 1));
            if (boundary && fired(r, c)) out[static_cast<std::size_t>(r) * w + c] = 1;
        }
    }
    return out;
}

EdgeMap sobel_edges(const BinaryMask& mask, const EdgeParams& params) {
    const int h = mask.height;
    const int w = mask.width;
    std::vector<double> gx, gy;
    sobel(as_field(mask), h, w, gx, gy);
    std::vector<double> mag(gx.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        mag[i] = std::hypot(gx[i], gy[i]);
        peak = std::max(peak, mag[i]);
    }
    EdgeMap e{h, w, EdgeMethod::sobel, std::vector<std::uint8_t>(mag.size(), 0)};
    if (peak == 0.0) return e;
    std::vector<std::uint8_t> raw(mag.size(), 0);
    for (std::size_t i = 0; i < mag.size(); ++i) raw[i] = mag[i] / peak > params.sobel_threshold ? 1 : 0;
    e.values = snap_to_boundary(raw, mask, 1);
    return e;
}

EdgeMap canny_edges(const BinaryMask& mask, const EdgeParams& params) {
    const int h = mask.height;
    const int w = mask.width;
    if (params.canny_sigma <= 0) throw ConfigError("canny sigma must be positive");
    if (params.canny_low > params.canny_high) throw ConfigError("canny low threshold exceeds the high one");
    std::vector<double> blurred = gaussian_blur(as_field(mask), h, w, params.canny_sigma);
    std::vector<double> gx, gy;
    sobel(blurred, h, w, gx, gy);
    std::vector<double> mag(gx.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        mag[i] = std::hypot(gx[i], gy[i]);
        peak = std::max(peak, mag[i]);
    }
    EdgeMap e{h, w, EdgeMethod::canny, std::vector<std::uint8_t>(mag.size(), 0)};
    if (peak == 0.0) return e;
    for (double& m : mag) m /= peak;

    auto mag_at = [&](int r, int c) {
        if (r < 0 || r >= h || c < 0 || c >= w) return 0.0;
        return mag[static_cast<std::size_t>(r) * w + c];
    };
    // Non-maximum suppression along the quantized gradient direction. The strict
    // comparison on one side keeps exactly one pixel of a symmetric ridge.
    std::vector<double> thin(mag.size(), 0.0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t k = static_cast<std::size_t>(r) * w + c;
            if (mag[k] == 0.0) continue;
            double angle = std::atan2(gy[k], gx[k]) * 180.0 / 3.14159265358979323846;
            if (angle < 0) angle += 180.0;
            int dr = 0;
            int dc = 0;
            if (angle < 22.5 || angle >= 157.5) {
                dc = 1;
            } else if (angle < 67.5) {
                dr = 1;
                dc = 1;
            } else if (angle < 112.5) {
                dr = 1;
            } else {
                dr = 1;
                dc = -1;
            }
            if (mag[k] > mag_at(r - dr, c - dc) && mag[k] >= mag_at(r + dr, c + dc)) thin[k] = mag[k];
        }
    }
    // Hysteresis with 8-connectivity.
    std::vector<std::uint8_t> raw(mag.size(), 0);
    std::deque<std::size_t> queue;
    for (std::size_t k = 0; k < thin.size(); ++k) {
        if (thin[k] >= params.canny_high) {
            raw[k] = 1;
            queue.push_back(k);
        }
    }
    while (!queue.empty()) {
        const std::size_t k = queue.front();
        queue.pop_front();
        const int r = static_cast<int>(k / w);
        const int c = static_cast<int>(k % w);
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                const int rr = r + dr;
                const int cc = c + dc;
                if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                const std::size_t kk = static_cast<std::size_t>(rr) * w + cc;
                if (!raw[kk] && thin[kk] >= params.canny_low) {
                    raw[kk] = 1;
                    queue.push_back(kk);
                }
            }
        }
    }
    e.values = snap_to_boundary(raw, mask, 1 + static_cast<int>(std::ceil(params.canny_sigma)));
    return e;
}

} // namespace

EdgeMap edge_map(const BinaryMask& mask, EdgeMethod method, const EdgeParams& params) {
    check_mask(mask);
    return method == EdgeMethod::canny ? canny_edges(mask, params) : sobel_edges(mask, params);
}

SkylineVector skyline_from_mask(const BinaryMask& mask) {
    check_mask(mask);
    SkylineVector s{mask.height, mask.width, std::vector<int>(mask.width, SkylineVector::kUndefined)};
    for (int c = 0; c < mask.width; ++c) {
        for (int r = 0; r < mask.height; ++r) {
            if (mask.at(r, c) == 0) {
                s.rows[c] = r;
                break;
            }
        }
    }
    return s;
}

SkylineVector skyline_from_edges(const EdgeMap& edges, const BinaryMask& mask) {
    if (edges.height != mask.height || edges.width != mask.width) {
        throw ShapeError("edge map and mask sizes differ");
    }
    SkylineVector s = skyline_from_mask(mask);
    for (int c = 0; c < edges.width; ++c) {
        // A column that is ground from the top has no transition to look for.
        if (s.rows[c] == 0) continue;
        for (int r = 0; r < edges.height; ++r) {
            if (edges.at(r, c)) {
                s.rows[c] = r;
                break;
            }
        }
    }
    return s;
}

SkylineVector extract_skyline(const BinaryMask& mask, SkylineMethod method, const EdgeParams& params) {
    switch (method) {
    case SkylineMethod::scan: return skyline_from_mask(mask);
    case SkylineMethod::sobel: return skyline_from_edges(edge_map(mask, EdgeMethod::sobel, params), mask);
    case SkylineMethod::canny: return skyline_from_edges(edge_map(mask, EdgeMethod::canny, params), mask);
    }
    throw ConfigError("unknown skyline method");
}

SkylineVector skyline_from_prediction(const Network& net, const Tensor& image, double threshold,
                                      const LetterboxRecord* letterbox) {
    return skyline_from_mask(predict_mask(net, image, threshold, letterbox));
}

RgbImage render_skyline_overlay(const RgbImage& image, const SkylineVector& skyline) {
    if (skyline.width != image.width) throw ShapeError("skyline width differs from the image width");
    cv::Mat canvas(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.pixels.data()));
    canvas = canvas.clone();
    const int thickness = std::max(1, image.width / 400);
    for (int c = 0; c + 1 < skyline.width; ++c) {
        if (!skyline.defined(c) || !skyline.defined(c + 1)) continue;
        cv::line(canvas, {c, skyline.rows[c]}, {c + 1, skyline.rows[c + 1]}, cv::Scalar(255, 0, 0), thickness);
    }
    if (skyline.width == 1 && skyline.defined(0)) canvas.at<cv::Vec3b>(skyline.rows[0], 0) = {255, 0, 0};
    RgbImage out(image.height, image.width);
    std::copy(canvas.data, canvas.data + out.pixels.size(), out.pixels.begin());
    return out;
}

} // namespace yunet
