#include "yunet/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>

#include "yunet/error.hpp"

namespace yunet {

BinaryMask::BinaryMask(int h, int w, std::vector<std::uint8_t> v) : height(h), width(w), values(std::move(v)) {
    if (values.size() != static_cast<std::size_t>(h) * w) {
        throw ShapeError("mask value count does not match " + std::to_string(h) + "x" + std::to_string(w));
    }
}

bool BinaryMask::is_binary() const {
    return std::all_of(values.begin(), values.end(), [](std::uint8_t v) { return v <= 1; });
}

void BinaryMask::require_binary(const char* what) const {
    if (!is_binary()) throw DataError(std::string(what) + " is not binary; expected values in {0,1}");
}

BinaryMask BinaryMask::flipped_lr() const {
    BinaryMask out(height, width);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) out.at(r, c) = at(r, width - 1 - c);
    }
    return out;
}

std::size_t BinaryMask::count_ones() const {
    return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

RgbImage read_rgb(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError("image not found: " + path.string());
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw DataError("cannot decode image: " + path.string());
    RgbImage out(bgr.rows, bgr.cols);
    for (int r = 0; r < bgr.rows; ++r) {
        const auto* line = bgr.ptr<cv::Vec3b>(r);
        for (int c = 0; c < bgr.cols; ++c) {
            out.at(r, c, 0) = line[c][2];
            out.at(r, c, 1) = line[c][1];
            out.at(r, c, 2) = line[c][0];
        }
    }
    return out;
}

BinaryMask read_mask(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError("mask not found: " + path.string());
    cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (gray.empty()) throw DataError("cannot decode mask: " + path.string());
    BinaryMask out(gray.rows, gray.cols);
    for (int r = 0; r < gray.rows; ++r) {
        const auto* line = gray.ptr<std::uint8_t>(r);
        for (int c = 0; c < gray.cols; ++c) out.at(r, c) = line[c] > 127 ? 1 : 0;
    }
    return out;
}

BinaryMask read_mask_strict(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError("mask not found: " + path.string());
    cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (gray.empty()) throw DataError("cannot decode mask: " + path.string());
    double lo = 0.0;
    double hi = 0.0;
    cv::minMaxLoc(gray, &lo, &hi);
    // Accept 0/1 or 0/255 encodings, nothing in between.
    const std::uint8_t one = hi > 1.0 ? 255 : 1;
    BinaryMask out(gray.rows, gray.cols);
    for (int r = 0; r < gray.rows; ++r) {
        const auto* line = gray.ptr<std::uint8_t>(r);
        for (int c = 0; c < gray.cols; ++c) {
            if (line[c] != 0 && line[c] != one) {
                throw DataError("mask is not binary: " + path.string() + " has value " + std::to_string(line[c]) +
                                " at row " + std::to_string(r) + ", column " + std::to_string(c));
            }
            out.at(r, c) = line[c] != 0;
        }
    }
    return out;
}

std::pair<int, int> read_image_size(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw DataError("cannot decode image: " + path.string());
    return {m.rows, m.cols};
}

namespace {

void write_mat(const cv::Mat& m, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), m);
    } catch (const cv::Exception& e) {
        throw IoError("cannot write " + path.string() + ": " + e.what());
    }
    if (!ok) throw IoError("cannot write " + path.string());
}

} // namespace

void write_png(const RgbImage& image, const std::filesystem::path& path) {
    cv::Mat bgr(image.height, image.width, CV_8UC3);
    for (int r = 0; r < image.height; ++r) {
        auto* line = bgr.ptr<cv::Vec3b>(r);
        for (int c = 0; c < image.width; ++c) {
            line[c] = cv::Vec3b(image.at(r, c, 2), image.at(r, c, 1), image.at(r, c, 0));
        }
    }
    write_mat(bgr, path);
}

void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path) {
    cv::Mat gray(mask.height, mask.width, CV_8UC1);
    for (int r = 0; r < mask.height; ++r) {
        auto* line = gray.ptr<std::uint8_t>(r);
        for (int c = 0; c < mask.width; ++c) line[c] = mask.at(r, c) ? 255 : 0;
    }
    write_mat(gray, path);
}

RgbImage resize_bilinear(const RgbImage& src, int height, int width) {
    if (src.height == height && src.width == width) return src;
    RgbImage out(height, width);
    const double sy = static_cast<double>(src.height) / height;
    const double sx = static_cast<double>(src.width) / width;
    for (int r = 0; r < height; ++r) {
        const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int c = 0; c < width; ++c) {
            const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            for (int ch = 0; ch < 3; ++ch) {
                const double top = src.at(y0, x0, ch) * (1 - wx) + src.at(y0, x1, ch) * wx;
                const double bottom = src.at(y1, x0, ch) * (1 - wx) + src.at(y1, x1, ch) * wx;
                out.at(r, c, ch) = static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bottom * wy));
            }
        }
    }
    return out;
}

BinaryMask resize_nearest(const BinaryMask& src, int height, int width) {
    if (src.height == height && src.width == width) return src;
    BinaryMask out(height, width);
    for (int r = 0; r < height; ++r) {
        const int sr = std::min(static_cast<int>((r + 0.5) * src.height / height), src.height - 1);
        for (int c = 0; c < width; ++c) {
            const int sc = std::min(static_cast<int>((c + 0.5) * src.width / width), src.width - 1);
            out.at(r, c) = src.at(sr, sc);
        }
    }
    return out;
}

} // namespace yunet
