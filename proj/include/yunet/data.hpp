#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "yunet/image.hpp"
#include "yunet/skyline.hpp"
#include "yunet/tensor.hpp"

namespace yunet {

// ---------------------------------------------------------------------------
// Manifests

enum class DatasetLayout { skyfinder, ch1, synthetic };

std::string_view to_string(DatasetLayout layout);
DatasetLayout parse_layout(std::string_view name);

struct ManifestEntry {
    std::filesystem::path image_path;
    std::filesystem::path mask_path;
    std::string site_id;
    int width = 0;
    int height = 0;

    bool operator==(const ManifestEntry&) const = default;
};

struct RejectedEntry {
    std::filesystem::path path;
    std::string reason;
};

struct DatasetManifest {
    DatasetLayout layout = DatasetLayout::synthetic;
    std::vector<ManifestEntry> entries;
    std::vector<RejectedEntry> rejects;
};

/// Layouts:
///   skyfinder  <root>/<camera>/images/*.{png,jpg} with one <root>/<camera>/mask.png
///   ch1        <root>/images/* and <root>/masks/* paired by file stem
///   synthetic  same as ch1 (as written by generate_synthetic)
/// Pairs that fail to decode or whose sizes differ land in `rejects`.
DatasetManifest scan_dataset(const std::filesystem::path& root, DatasetLayout layout);

/// CSV columns: image_path,mask_path,site_id,width,height
void write_manifest_csv(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest_csv(const std::filesystem::path& path, DatasetLayout layout);

/// Train share of the Skyfinder split: 77535 / (77535 + 13914).
inline constexpr double kSkyfinderTrainFraction = 77535.0 / (77535.0 + 13914.0);

/// Deterministic disjoint split. Fractions must sum to 1 and leave both sides non-empty.
std::pair<DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest,
                                                           std::pair<double, double> fractions,
                                                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Preprocessing

struct PreprocessSpec {
    int target_height = 64;
    int target_width = 64;
    std::uint8_t fill = 114;
    std::array<double, 3> mean{0.0, 0.0, 0.0};            // in 0..255 pixel units
    std::array<double, 3> scale{1 / 255.0, 1 / 255.0, 1 / 255.0};
    double flip_probability = 0.5;                         // train mode only

    void validate() const;
};

/// Aspect-preserving resize into a target box, centered with padding.
struct LetterboxRecord {
    int source_height = 0;
    int source_width = 0;
    int target_height = 0;
    int target_width = 0;
    double scale = 1.0;
    int resized_height = 0;
    int resized_width = 0;
    int pad_top = 0;
    int pad_left = 0;

    int pad_bottom() const { return target_height - resized_height - pad_top; }
    int pad_right() const { return target_width - resized_width - pad_left; }
    bool operator==(const LetterboxRecord&) const = default;
};

LetterboxRecord compute_letterbox(int source_height, int source_width, int target_height, int target_width);
RgbImage letterbox_image(const RgbImage& image, const LetterboxRecord& rec, std::uint8_t fill);
/// Nearest-neighbor resize; padding is non-sky.
BinaryMask letterbox_mask(const BinaryMask& mask, const LetterboxRecord& rec);
/// The unpadded region at target resolution.
BinaryMask crop_to_content(const BinaryMask& mask, const LetterboxRecord& rec);
/// Crops the padding and resizes back to the source resolution.
BinaryMask restore_mask(const BinaryMask& mask, const LetterboxRecord& rec);

/// (3,H,W) tensor normalized as (pixel - mean) * scale per channel.
Tensor image_to_tensor(const RgbImage& image, const PreprocessSpec& spec);
/// (1,H,W) tensor of 0/1.
Tensor mask_to_tensor(const BinaryMask& mask);
BinaryMask tensor_to_mask(const Tensor& t);

struct Sample {
    Tensor image;   // (3,H,W)
    Tensor mask;    // (1,H,W)
    LetterboxRecord letterbox;
    bool flipped = false;
    std::string id;
};

Sample load_and_preprocess(const ManifestEntry& entry, const PreprocessSpec& spec, bool train_mode,
                           std::uint64_t seed);
Sample preprocess(const RgbImage& image, const BinaryMask& mask, const PreprocessSpec& spec, bool train_mode,
                  std::uint64_t seed, std::string id = {});

/// Random-access source of preprocessed samples. `seed` drives train-mode augmentation only.
class Dataset {
public:
    virtual ~Dataset() = default;
    virtual std::size_t size() const = 0;
    virtual Sample get(std::size_t index, bool train_mode, std::uint64_t seed) const = 0;
};

class ManifestDataset final : public Dataset {
public:
    ManifestDataset(DatasetManifest manifest, PreprocessSpec spec);

    std::size_t size() const override { return manifest_.entries.size(); }
    Sample get(std::size_t index, bool train_mode, std::uint64_t seed) const override;
    const DatasetManifest& manifest() const { return manifest_; }

private:
    DatasetManifest manifest_;
    PreprocessSpec spec_;
};

/// Decoded images and masks held in memory.
class InMemoryDataset final : public Dataset {
public:
    InMemoryDataset(PreprocessSpec spec) : spec_(spec) {}

    void add(RgbImage image, BinaryMask mask, std::string id);
    std::size_t size() const override { return images_.size(); }
    Sample get(std::size_t index, bool train_mode, std::uint64_t seed) const override;

private:
    PreprocessSpec spec_;
    std::vector<RgbImage> images_;
    std::vector<BinaryMask> masks_;
    std::vector<std::string> ids_;
};

// ---------------------------------------------------------------------------
// Synthetic skyline scenes

struct SynthConfig {
    int count = 8;
    int height = 64;
    int width = 64;
    double amplitude = 0.08;   // horizon roughness, fraction of image height
    int frequency = 4;         // highest sinusoid frequency in cycles per image width
    double lighting_jitter = 0.15;
    double noise = 0.03;       // pixel noise standard deviation, fraction of 255
    double ground_texture = 0.12;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticSample {
    RgbImage image;
    BinaryMask mask;
    SkylineVector skyline;  // computed from the horizon curve, not from the mask
};

SyntheticSample generate_synthetic_sample(const SynthConfig& cfg, int index);

/// Writes images/NNNN.png, masks/NNNN.png, skylines.csv and manifest.csv under out_dir.
DatasetManifest generate_synthetic(const SynthConfig& cfg, const std::filesystem::path& out_dir);

InMemoryDataset synthetic_dataset(const SynthConfig& cfg, const PreprocessSpec& spec);

} // namespace yunet
