#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace yunet {

/// 8-bit RGB image, row-major, interleaved channels.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;

    RgbImage() = default;
    RgbImage(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, 0) {}

    std::uint8_t& at(int r, int c, int ch) { return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }
    std::uint8_t at(int r, int c, int ch) const {
        return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
    }

    bool operator==(const RgbImage&) const = default;
};

/// Sky mask: 1 = sky, 0 = non-sky. Values are not validated on construction;
/// operations that require a binary mask call `require_binary`.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;

    BinaryMask() = default;
    BinaryMask(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}
    BinaryMask(int h, int w, std::vector<std::uint8_t> v);

    std::uint8_t& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }

    bool is_binary() const;
    /// Throws DataError when any value is outside {0,1}.
    void require_binary(const char* what = "mask") const;
    BinaryMask flipped_lr() const;
    std::size_t count_ones() const;

    bool operator==(const BinaryMask&) const = default;
};

// PNG/JPEG codec. Masks decode as grayscale with value > 127 meaning sky.
RgbImage read_rgb(const std::filesystem::path& path);
BinaryMask read_mask(const std::filesystem::path& path);
/// Rejects anything other than 0/255 (or 0/1) instead of thresholding.
BinaryMask read_mask_strict(const std::filesystem::path& path);
void write_png(const RgbImage& image, const std::filesystem::path& path);
/// Writes 0/255 single-channel PNG.
void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path);
/// Image size without keeping the pixels.
std::pair<int, int> read_image_size(const std::filesystem::path& path);

RgbImage resize_bilinear(const RgbImage& src, int height, int width);
BinaryMask resize_nearest(const BinaryMask& src, int height, int width);

} // namespace yunet
