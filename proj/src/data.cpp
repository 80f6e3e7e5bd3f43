#include "yunet/data.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "yunet/error.hpp"

namespace yunet {

namespace fs = std::filesystem;

std::string_view to_string(DatasetLayout layout) {
    switch (layout) {
    case DatasetLayout::skyfinder: return "skyfinder";
    case DatasetLayout::ch1: return "ch1";
    case DatasetLayout::synthetic: return "synthetic";
    }
    return "?";
}

DatasetLayout parse_layout(std::string_view name) {
    for (DatasetLayout l : {DatasetLayout::skyfinder, DatasetLayout::ch1, DatasetLayout::synthetic}) {
        if (to_string(l) == name) return l;
    }
    throw ConfigError("unknown dataset layout '" + std::string(name) + "'; expected one of {skyfinder,ch1,synthetic}");
}

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> sorted_images(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string layout_hint(DatasetLayout layout) {
    switch (layout) {
    case DatasetLayout::skyfinder: return "<root>/<camera_id>/images/*.png|jpg plus <root>/<camera_id>/mask.png";
    case DatasetLayout::ch1:
    case DatasetLayout::synthetic: return "<root>/images/* and <root>/masks/* matched by file stem";
    }
    return {};
}

// Adds the pair to entries or rejects, after decoding both files.
void validate_pair(DatasetManifest& m, const fs::path& image, const fs::path& mask, const std::string& site,
                   std::optional<std::pair<int, int>> known_mask_size = std::nullopt) {
    std::pair<int, int> isz;
    std::pair<int, int> msz;
    try {
        isz = read_image_size(image);
    } catch (const Error& e) {
        m.rejects.push_back({image, "image does not decode"});
        return;
    }
    try {
        msz = known_mask_size ? *known_mask_size : read_image_size(mask);
    } catch (const Error& e) {
        m.rejects.push_back({image, "mask does not decode: " + mask.string()});
        return;
    }
    if (isz != msz) {
        m.rejects.push_back({image, "mask size " + std::to_string(msz.second) + "x" + std::to_string(msz.first) +
                                        " differs from image size " + std::to_string(isz.second) + "x" +
                                        std::to_string(isz.first)});
        return;
    }
    m.entries.push_back({image, mask, site, isz.second, isz.first});
}

} // namespace

DatasetManifest scan_dataset(const fs::path& root, DatasetLayout layout) {
    if (!fs::is_directory(root)) {
        throw DataError("dataset root does not exist: " + root.string() + " (expected layout " +
                        layout_hint(layout) + ")");
    }
    DatasetManifest m;
    m.layout = layout;
    if (layout == DatasetLayout::skyfinder) {
        std::vector<fs::path> cameras;
        for (const auto& e : fs::directory_iterator(root)) {
            if (e.is_directory()) cameras.push_back(e.path());
        }
        std::sort(cameras.begin(), cameras.end());
        for (const auto& cam : cameras) {
            const fs::path mask = cam / "mask.png";
            const std::string site = cam.filename().string();
            std::optional<std::pair<int, int>> mask_size;
            if (fs::exists(mask)) {
                try {
                    mask_size = read_image_size(mask);
                } catch (const Error&) {
                }
            }
            for (const auto& img : sorted_images(cam / "images")) {
                if (!mask_size) {
                    m.rejects.push_back({img, "camera has no decodable mask.png"});
                    continue;
                }
                validate_pair(m, img, mask, site, mask_size);
            }
        }
    } else {
        std::map<std::string, fs::path> masks;
        for (const auto& p : sorted_images(root / "masks")) masks.emplace(p.stem().string(), p);
        for (const auto& img : sorted_images(root / "images")) {
            auto it = masks.find(img.stem().string());
            if (it == masks.end()) {
                m.rejects.push_back({img, "no mask with matching stem"});
                continue;
            }
            validate_pair(m, img, it->second, std::string(to_string(layout)));
        }
    }
    if (m.entries.empty()) {
        throw DataError("no valid image/mask pairs under " + root.string() + " (expected layout " +
                        layout_hint(layout) + ")");
    }
    return m;
}

void write_manifest_csv(const DatasetManifest& manifest, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path.string());
    const fs::path base = path.parent_path();
    out << "image_path,mask_path,site_id,width,height\n";
    for (const auto& e : manifest.entries) {
        auto rel = [&](const fs::path& p) {
            const fs::path r = p.lexically_relative(base);
            return (r.empty() || *r.begin() == "..") ? p.generic_string() : r.generic_string();
        };
        out << rel(e.image_path) << ',' << rel(e.mask_path) << ',' << e.site_id << ',' << e.width << ','
            << e.height << '\n';
    }
    if (!out) throw IoError("cannot write manifest " + path.string());
}

DatasetManifest read_manifest_csv(const fs::path& path, DatasetLayout layout) {
    std::ifstream in(path);
    if (!in) throw MissingFileError("manifest not found: " + path.string());
    DatasetManifest m;
    m.layout = layout;
    std::string line;
    std::getline(in, line);
    const fs::path base = path.parent_path();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != 5) throw DataError("malformed manifest row: " + line);
        auto resolve = [&](const std::string& s) {
            fs::path p(s);
            return p.is_absolute() ? p : base / p;
        };
        try {
            m.entries.push_back({resolve(f[0]), resolve(f[1]), f[2], std::stoi(f[3]), std::stoi(f[4])});
        } catch (const std::exception&) {
            throw DataError("malformed manifest row: " + line);
        }
    }
    return m;
}

std::pair<DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest,
                                                           std::pair<double, double> fractions,
                                                           std::uint64_t seed) {
    const auto [train_frac, test_frac] = fractions;
    if (train_frac < 0 || test_frac < 0 || std::abs(train_frac + test_frac - 1.0) > 1e-9) {
        throw DataError("split fractions must be non-negative and sum to 1");
    }
    const std::size_t n = manifest.entries.size();
    const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
    if (n_train == 0 || n_train >= n) {
        throw DataError("split of " + std::to_string(n) + " entries at fraction " + std::to_string(train_frac) +
                        " leaves one side empty");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<char> in_train(n, 0);
    for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;
    DatasetManifest train;
    DatasetManifest test;
    train.layout = test.layout = manifest.layout;
    for (std::size_t i = 0; i < n; ++i) (in_train[i] ? train : test).entries.push_back(manifest.entries[i]);
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Preprocessing

void PreprocessSpec::validate() const {
    if (target_height < 32 || target_width < 32 || target_height % 32 != 0 || target_width % 32 != 0) {
        throw ConfigError("target size " + std::to_string(target_height) + "x" + std::to_string(target_width) +
                          " must be a positive multiple of 32");
    }
    if (flip_probability < 0 || flip_probability > 1) throw ConfigError("flip probability must lie in [0,1]");
    for (double s : scale) {
        if (!(s > 0) || !std::isfinite(s)) throw ConfigError("normalization scale must be positive");
    }
}

LetterboxRecord compute_letterbox(int source_height, int source_width, int target_height, int target_width) {
    if (source_height < 1 || source_width < 1) throw DataError("cannot letterbox an empty image");
    LetterboxRecord r;
    r.source_height = source_height;
    r.source_width = source_width;
    r.target_height = target_height;
    r.target_width = target_width;
    r.scale = std::min(static_cast<double>(target_height) / source_height,
                       static_cast<double>(target_width) / source_width);
    r.resized_height = std::clamp(static_cast<int>(std::lround(source_height * r.scale)), 1, target_height);
    r.resized_width = std::clamp(static_cast<int>(std::lround(source_width * r.scale)), 1, target_width);
    r.pad_top = (target_height - r.resized_height) / 2;
    r.pad_left = (target_width - r.resized_width) / 2;
    return r;
}

RgbImage letterbox_image(const RgbImage& image, const LetterboxRecord& rec, std::uint8_t fill) {
    const RgbImage resized = resize_bilinear(image, rec.resized_height, rec.resized_width);
    RgbImage out(rec.target_height, rec.target_width);
    std::fill(out.pixels.begin(), out.pixels.end(), fill);
    for (int r = 0; r < rec.resized_height; ++r) {
        std::copy_n(resized.pixels.data() + static_cast<std::size_t>(r) * rec.resized_width * 3,
                    static_cast<std::size_t>(rec.resized_width) * 3,
                    out.pixels.data() + (static_cast<std::size_t>(r + rec.pad_top) * rec.target_width + rec.pad_left) * 3);
    }
    return out;
}

BinaryMask letterbox_mask(const BinaryMask& mask, const LetterboxRecord& rec) {
    const BinaryMask resized = resize_nearest(mask, rec.resized_height, rec.resized_width);
    BinaryMask out(rec.target_height, rec.target_width, 0);
    for (int r = 0; r < rec.resized_height; ++r) {
        for (int c = 0; c < rec.resized_width; ++c) out.at(r + rec.pad_top, c + rec.pad_left) = resized.at(r, c);
    }
    return out;
}

BinaryMask crop_to_content(const BinaryMask& mask, const LetterboxRecord& rec) {
    if (mask.height != rec.target_height || mask.width != rec.target_width) {
        throw ShapeError("mask does not match the letterbox target size");
    }
    BinaryMask out(rec.resized_height, rec.resized_width);
    for (int r = 0; r < rec.resized_height; ++r) {
        for (int c = 0; c < rec.resized_width; ++c) out.at(r, c) = mask.at(r + rec.pad_top, c + rec.pad_left);
    }
    return out;
}

BinaryMask restore_mask(const BinaryMask& mask, const LetterboxRecord& rec) {
    return resize_nearest(crop_to_content(mask, rec), rec.source_height, rec.source_width);
}

Tensor image_to_tensor(const RgbImage& image, const PreprocessSpec& spec) {
    Tensor t({3, image.height, image.width});
    const std::size_t plane = static_cast<std::size_t>(image.height) * image.width;
    for (int ch = 0; ch < 3; ++ch) {
        const double mean = spec.mean[ch];
        const double scale = spec.scale[ch];
        for (std::size_t i = 0; i < plane; ++i) {
            t[ch * plane + i] = static_cast<float>((image.pixels[i * 3 + ch] - mean) * scale);
        }
    }
    return t;
}

Tensor mask_to_tensor(const BinaryMask& mask) {
    Tensor t({1, mask.height, mask.width});
    for (std::size_t i = 0; i < mask.values.size(); ++i) t[i] = mask.values[i] ? 1.0f : 0.0f;
    return t;
}

BinaryMask tensor_to_mask(const Tensor& t) {
    const int h = t.shape()[t.rank() - 2];
    const int w = t.shape()[t.rank() - 1];
    if (t.size() != static_cast<std::size_t>(h) * w) throw ShapeError("expected a single-channel mask tensor");
    BinaryMask m(h, w);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] != 0.0f && t[i] != 1.0f) throw DataError("mask tensor holds non-binary values");
        m.values[i] = t[i] != 0.0f ? 1 : 0;
    }
    return m;
}

Sample preprocess(const RgbImage& image, const BinaryMask& mask, const PreprocessSpec& spec, bool train_mode,
                  std::uint64_t seed, std::string id) {
    spec.validate();
    if (image.height != mask.height || image.width != mask.width) {
        throw DataError("mask size differs from image size for '" + id + "'");
    }
    mask.require_binary();
    bool flip = false;
    if (train_mode && spec.flip_probability > 0) {
        std::mt19937_64 rng(seed);
        flip = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < spec.flip_probability;
    }
    RgbImage img = image;
    BinaryMask msk = mask;
    if (flip) {
        for (int r = 0; r < img.height; ++r) {
            for (int c = 0; c < img.width / 2; ++c) {
                for (int ch = 0; ch < 3; ++ch) std::swap(img.at(r, c, ch), img.at(r, img.width - 1 - c, ch));
            }
        }
        msk = msk.flipped_lr();
    }
    Sample s;
    s.letterbox = compute_letterbox(image.height, image.width, spec.target_height, spec.target_width);
    s.image = image_to_tensor(letterbox_image(img, s.letterbox, spec.fill), spec);
    const BinaryMask boxed = letterbox_mask(msk, s.letterbox);
    boxed.require_binary("preprocessed mask");
    s.mask = mask_to_tensor(boxed);
    s.flipped = flip;
    s.id = std::move(id);
    return s;
}

Sample load_and_preprocess(const ManifestEntry& entry, const PreprocessSpec& spec, bool train_mode,
                           std::uint64_t seed) {
    const RgbImage image = read_rgb(entry.image_path);
    const BinaryMask mask = read_mask(entry.mask_path);
    if (image.height != mask.height || image.width != mask.width) {
        throw DataError("mask " + entry.mask_path.string() + " does not match image " + entry.image_path.string());
    }
    return preprocess(image, mask, spec, train_mode, seed, entry.image_path.stem().string());
}

ManifestDataset::ManifestDataset(DatasetManifest manifest, PreprocessSpec spec)
    : manifest_(std::move(manifest)), spec_(spec) {
    spec_.validate();
}

Sample ManifestDataset::get(std::size_t index, bool train_mode, std::uint64_t seed) const {
    return load_and_preprocess(manifest_.entries.at(index), spec_, train_mode, seed);
}

void InMemoryDataset::add(RgbImage image, BinaryMask mask, std::string id) {
    if (image.height != mask.height || image.width != mask.width) {
        throw DataError("mask size differs from image size for '" + id + "'");
    }
    images_.push_back(std::move(image));
    masks_.push_back(std::move(mask));
    ids_.push_back(std::move(id));
}

Sample InMemoryDataset::get(std::size_t index, bool train_mode, std::uint64_t seed) const {
    return preprocess(images_.at(index), masks_.at(index), spec_, train_mode, seed, ids_.at(index));
}

// ---------------------------------------------------------------------------
// Synthetic scenes

void SynthConfig::validate() const {
    if (count < 1) throw ConfigError("synthetic count must be >= 1");
    if (height < 32 || width < 32) throw ConfigError("synthetic images must be at least 32x32");
    if (amplitude < 0) throw ConfigError("horizon amplitude must be >= 0");
    if (frequency < 1) throw ConfigError("horizon frequency must be >= 1");
    if (lighting_jitter < 0 || lighting_jitter >= 1) throw ConfigError("lighting jitter must lie in [0,1)");
    if (noise < 0) throw ConfigError("noise level must be >= 0");
    if (ground_texture < 0) throw ConfigError("ground texture must be >= 0");
}

SyntheticSample generate_synthetic_sample(const SynthConfig& cfg, int index) {
    cfg.validate();
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(seq);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    const int h = cfg.height;
    const int w = cfg.width;
    constexpr double two_pi = 2.0 * std::numbers::pi;

    // Horizon curve: base line plus three low-frequency sinusoids.
    const double base = uniform(0.35, 0.65) * h;
    struct Wave {
        double amp, freq, phase;
    };
    std::vector<Wave> waves;
    for (int k = 1; k <= 3; ++k) {
        const double freq = std::uniform_int_distribution<int>(1, cfg.frequency)(rng);
        waves.push_back({cfg.amplitude * h * uniform(0.3, 1.0) / k, freq, uniform(0.0, two_pi)});
    }
    std::vector<double> horizon(w);
    for (int c = 0; c < w; ++c) {
        double y = base;
        for (const auto& wv : waves) y += wv.amp * std::sin(two_pi * wv.freq * (c + 0.5) / w + wv.phase);
        horizon[c] = y;
    }

    const double sky_top[3] = {uniform(40, 90), uniform(90, 140), uniform(170, 230)};
    const double sky_low[3] = {uniform(150, 200), uniform(180, 215), uniform(210, 245)};
    const double ground[3] = {uniform(50, 110), uniform(60, 120), uniform(30, 80)};
    const double cloud_strength = uniform(0.0, 0.3);
    const double cloud_fx = uniform(1.0, 3.0);
    const double cloud_fy = uniform(1.0, 3.0);
    const double cloud_phase = uniform(0.0, two_pi);
    const double lighting = uniform(1.0 - cfg.lighting_jitter, 1.0 + cfg.lighting_jitter);

    // Coarse ground texture on a 4x4-pixel cell grid.
    const int cells_y = (h + 3) / 4;
    const int cells_x = (w + 3) / 4;
    std::vector<double> cells(static_cast<std::size_t>(cells_y) * cells_x);
    for (double& v : cells) v = uniform(-1.0, 1.0);
    std::normal_distribution<double> pixel_noise(0.0, cfg.noise * 255.0);

    SyntheticSample s;
    s.image = RgbImage(h, w);
    s.mask = BinaryMask(h, w);
    s.skyline = SkylineVector{h, w, std::vector<int>(w, SkylineVector::kUndefined)};
    for (int c = 0; c < w; ++c) {
        const double y = horizon[c];
        const double first_ground = std::ceil(y);
        if (first_ground < h) s.skyline.rows[c] = static_cast<int>(std::max(first_ground, 0.0));
    }
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double y = horizon[c];
            const bool sky = r < y;
            s.mask.at(r, c) = sky ? 1 : 0;
            double px[3];
            if (sky) {
                const double t = std::clamp(r / std::max(y, 1.0), 0.0, 1.0);
                const double cloud = cloud_strength * std::max(
                    0.0, std::sin(two_pi * cloud_fx * c / w + cloud_phase) * std::sin(two_pi * cloud_fy * r / h));
                for (int ch = 0; ch < 3; ++ch) {
                    const double v = sky_top[ch] * (1 - t) + sky_low[ch] * t;
                    px[ch] = v * (1 - cloud) + 240.0 * cloud;
                }
            } else {
                const double depth = (r - y) / h;
                const double cell = cells[static_cast<std::size_t>(r / 4) * cells_x + c / 4];
                const double tex = 1.0 + cfg.ground_texture * cell;
                for (int ch = 0; ch < 3; ++ch) px[ch] = ground[ch] * tex * (1.0 - 0.3 * depth);
            }
            for (int ch = 0; ch < 3; ++ch) {
                const double v = px[ch] * lighting + pixel_noise(rng);
                s.image.at(r, c, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return s;
}

DatasetManifest generate_synthetic(const SynthConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    try {
        fs::create_directories(out_dir / "images");
        fs::create_directories(out_dir / "masks");
    } catch (const fs::filesystem_error& e) {
        throw IoError("cannot create synthetic dataset directory " + out_dir.string() + ": " + e.what());
    }
    DatasetManifest m;
    m.layout = DatasetLayout::synthetic;
    std::ofstream skylines(out_dir / "skylines.csv");
    if (!skylines) throw IoError("cannot write " + (out_dir / "skylines.csv").string());
    for (int i = 0; i < cfg.count; ++i) {
        const SyntheticSample s = generate_synthetic_sample(cfg, i);
        char name[32];
        std::snprintf(name, sizeof(name), "%04d.png", i);
        const fs::path img = out_dir / "images" / name;
        const fs::path msk = out_dir / "masks" / name;
        write_png(s.image, img);
        write_mask_png(s.mask, msk);
        skylines << s.skyline.to_csv_line() << '\n';
        m.entries.push_back({img, msk, "synthetic", cfg.width, cfg.height});
    }
    if (!skylines) throw IoError("cannot write " + (out_dir / "skylines.csv").string());
    write_manifest_csv(m, out_dir / "manifest.csv");
    return m;
}

InMemoryDataset synthetic_dataset(const SynthConfig& cfg, const PreprocessSpec& spec) {
    cfg.validate();
    InMemoryDataset ds(spec);
    for (int i = 0; i < cfg.count; ++i) {
        SyntheticSample s = generate_synthetic_sample(cfg, i);
        char name[32];
        std::snprintf(name, sizeof(name), "%04d", i);
        ds.add(std::move(s.image), std::move(s.mask), name);
    }
    return ds;
}

} // namespace yunet
