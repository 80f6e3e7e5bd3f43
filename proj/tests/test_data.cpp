#include <doctest.h>

#include <fstream>
#include <random>
#include <set>

#include "support.hpp"
#include "yunet/error.hpp"

using namespace yunet;
namespace fs = std::filesystem;

namespace {

DatasetManifest fake_manifest(int n) {
    DatasetManifest m;
    for (int i = 0; i < n; ++i) {
        m.entries.push_back({"img" + std::to_string(i) + ".png", "mask" + std::to_string(i) + ".png", "s", 8, 8});
    }
    return m;
}

RgbImage gradient_image(int h, int w) {
    RgbImage img(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            img.at(r, c, 0) = static_cast<std::uint8_t>(r * 7);
            img.at(r, c, 1) = static_cast<std::uint8_t>(c * 5);
            img.at(r, c, 2) = static_cast<std::uint8_t>((r + c) * 3);
        }
    }
    return img;
}

} // namespace

TEST_CASE("CH1-shaped frames letterbox into 704x1024 with centered padding") {
    const LetterboxRecord r = compute_letterbox(679, 1024, 704, 1024);
    CHECK(r.scale == 1.0);
    CHECK(r.resized_height == 679);
    CHECK(r.resized_width == 1024);
    // 25 rows of padding split 12 above, 13 below.
    CHECK(r.pad_top == 12);
    CHECK(r.pad_bottom() == 13);
    CHECK(r.pad_left == 0);
    CHECK(r.pad_right() == 0);
}

TEST_CASE("letterbox scales by the tighter ratio") {
    const LetterboxRecord r = compute_letterbox(1024, 679, 64, 64);
    CHECK(r.scale == 64.0 / 1024.0);
    CHECK(r.resized_height == 64);
    CHECK(r.resized_width == 42);  // 679 / 16 = 42.44
    CHECK(r.pad_left == 11);
    CHECK(r.pad_right() == 11);
}

TEST_CASE("pad-only letterboxing inverts exactly") {
    const RgbImage img = gradient_image(20, 32);
    const LetterboxRecord r = compute_letterbox(20, 32, 32, 32);
    const RgbImage boxed = letterbox_image(img, r, 114);
    CHECK(boxed.at(0, 0, 0) == 114);
    CHECK(boxed.at(r.pad_top, 5, 1) == img.at(0, 5, 1));
    BinaryMask m(20, 32);
    for (int c = 0; c < 32; ++c) {
        for (int row = 0; row < c % 20; ++row) m.at(row, c) = 1;
    }
    const BinaryMask boxed_mask = letterbox_mask(m, r);
    CHECK(boxed_mask.at(0, 0) == 0);  // padding is non-sky
    CHECK(restore_mask(boxed_mask, r) == m);
    CHECK(crop_to_content(boxed_mask, r) == m);
}

TEST_CASE("tensor conversion normalizes per channel") {
    RgbImage img(32, 32);
    img.at(3, 4, 0) = 255;
    img.at(3, 4, 2) = 51;
    PreprocessSpec spec;
    spec.target_height = 32;
    spec.target_width = 32;
    const Tensor t = image_to_tensor(img, spec);
    CHECK(t.shape() == Shape{3, 32, 32});
    CHECK(t[0 * 1024 + 3 * 32 + 4] == doctest::Approx(1.0));
    CHECK(t[2 * 1024 + 3 * 32 + 4] == doctest::Approx(0.2));
    BinaryMask m(32, 32);
    m.at(1, 2) = 1;
    CHECK(tensor_to_mask(mask_to_tensor(m)) == m);
}

TEST_CASE("train-mode flips are seed-determined and keep image and mask aligned") {
    SynthConfig sc;
    sc.count = 1;
    const SyntheticSample s = generate_synthetic_sample(sc, 0);
    PreprocessSpec spec;
    spec.flip_probability = 1.0;
    const Sample a = preprocess(s.image, s.mask, spec, true, 42);
    CHECK(a.flipped);
    CHECK(tensor_to_mask(a.mask) == s.mask.flipped_lr());
    spec.flip_probability = 0.0;
    CHECK_FALSE(preprocess(s.image, s.mask, spec, true, 42).flipped);
    spec.flip_probability = 1.0;
    CHECK_FALSE(preprocess(s.image, s.mask, spec, false, 42).flipped);
}

TEST_CASE("split is deterministic, disjoint and exhaustive") {
    const DatasetManifest m = fake_manifest(50);
    const auto [a1, b1] = split_manifest(m, {0.8, 0.2}, 3);
    const auto [a2, b2] = split_manifest(m, {0.8, 0.2}, 3);
    CHECK(a1.entries == a2.entries);
    CHECK(b1.entries == b2.entries);
    CHECK(a1.entries.size() == 40);
    CHECK(b1.entries.size() == 10);
    std::set<std::string> seen;
    for (const auto& e : a1.entries) seen.insert(e.image_path.string());
    for (const auto& e : b1.entries) CHECK(seen.insert(e.image_path.string()).second);
    CHECK(seen.size() == 50);
    const auto [a3, b3] = split_manifest(m, {0.8, 0.2}, 4);
    CHECK_FALSE(a3.entries == a1.entries);
    CHECK_THROWS_AS(split_manifest(m, {0.7, 0.2}, 0), DataError);
    CHECK_THROWS_AS(split_manifest(fake_manifest(1), {0.5, 0.5}, 0), DataError);
}

TEST_CASE("Skyfinder train fraction matches the published split sizes") {
    CHECK(kSkyfinderTrainFraction == doctest::Approx(77535.0 / 91449.0).epsilon(1e-15));
}

TEST_CASE("synthetic samples are deterministic and their skylines match their masks") {
    SynthConfig sc;
    sc.count = 20;
    sc.seed = 9;
    for (int i = 0; i < sc.count; ++i) {
        const SyntheticSample s = generate_synthetic_sample(sc, i);
        CHECK(s.image == generate_synthetic_sample(sc, i).image);
        CHECK(s.mask.is_binary());
        CHECK(s.skyline == SkylineVector{s.mask.height, s.mask.width, testing::brute_skyline(s.mask)});
    }
    SynthConfig other = sc;
    other.seed = 10;
    CHECK_FALSE(generate_synthetic_sample(sc, 0).image == generate_synthetic_sample(other, 0).image);
}

TEST_CASE("synthetic datasets materialize and rescan identically") {
    const auto dir = testing::scratch_dir("synth");
    SynthConfig sc;
    sc.count = 4;
    sc.height = 32;
    sc.width = 48;
    const DatasetManifest written = generate_synthetic(sc, dir / "a");
    generate_synthetic(sc, dir / "b");
    CHECK(written.entries.size() == 4);
    for (const char* f : {"skylines.csv", "manifest.csv", "images/0003.png", "masks/0003.png"}) {
        std::ifstream a(dir / "a" / f, std::ios::binary);
        std::ifstream b(dir / "b" / f, std::ios::binary);
        const std::string sa((std::istreambuf_iterator<char>(a)), {});
        const std::string sb((std::istreambuf_iterator<char>(b)), {});
        CHECK(!sa.empty());
        CHECK(sa == sb);
    }
    const DatasetManifest scanned = scan_dataset(dir / "a", DatasetLayout::synthetic);
    CHECK(scanned.entries.size() == 4);
    CHECK(scanned.rejects.empty());
    CHECK(scanned.entries[0].width == 48);
    CHECK(scanned.entries[0].height == 32);

    write_manifest_csv(scanned, dir / "m.csv");
    const DatasetManifest back = read_manifest_csv(dir / "m.csv", DatasetLayout::synthetic);
    REQUIRE(back.entries.size() == 4);
    CHECK(fs::equivalent(back.entries[2].image_path, scanned.entries[2].image_path));

    const ManifestDataset ds(scanned, PreprocessSpec{});
    const Sample s = ds.get(1, false, 0);
    CHECK(s.image.shape() == Shape{3, 64, 64});
    CHECK(tensor_to_mask(s.mask).height == 64);
    // 32x48 scales by 4/3 to 43x64.
    const BinaryMask content = crop_to_content(tensor_to_mask(s.mask), s.letterbox);
    CHECK(content.width == 64);
    CHECK(content.height == 43);
    fs::remove_all(dir);
}

TEST_CASE("scanning reports missing roots and rejects bad pairs") {
    const auto dir = testing::scratch_dir("scan");
    CHECK_THROWS_AS(scan_dataset(dir / "absent", DatasetLayout::ch1), DataError);
    fs::create_directories(dir / "ch1" / "images");
    fs::create_directories(dir / "ch1" / "masks");
    CHECK_THROWS_AS(scan_dataset(dir / "ch1", DatasetLayout::ch1), DataError);

    write_png(gradient_image(10, 12), dir / "ch1" / "images" / "a.png");
    write_mask_png(BinaryMask(10, 12, 1), dir / "ch1" / "masks" / "a.png");
    write_png(gradient_image(10, 12), dir / "ch1" / "images" / "b.png");
    write_mask_png(BinaryMask(9, 12, 1), dir / "ch1" / "masks" / "b.png");
    write_png(gradient_image(10, 12), dir / "ch1" / "images" / "c.png");
    std::ofstream(dir / "ch1" / "masks" / "c.png") << "garbage";
    const DatasetManifest m = scan_dataset(dir / "ch1", DatasetLayout::ch1);
    CHECK(m.entries.size() == 1);
    CHECK(m.rejects.size() == 2);

    // Skyfinder: one mask per camera directory.
    fs::create_directories(dir / "sf" / "cam1" / "images");
    write_mask_png(BinaryMask(10, 12, 0), dir / "sf" / "cam1" / "mask.png");
    write_png(gradient_image(10, 12), dir / "sf" / "cam1" / "images" / "t0.jpg");
    write_png(gradient_image(10, 12), dir / "sf" / "cam1" / "images" / "t1.png");
    const DatasetManifest sf = scan_dataset(dir / "sf", DatasetLayout::skyfinder);
    CHECK(sf.entries.size() == 2);
    CHECK(sf.entries[0].site_id == "cam1");
    CHECK(sf.entries[0].mask_path == sf.entries[1].mask_path);
    fs::remove_all(dir);
}

TEST_CASE("mask decoding thresholds at 127") {
    const auto dir = testing::scratch_dir("maskdecode");
    RgbImage gray(1, 3);
    gray.at(0, 0, 0) = gray.at(0, 0, 1) = gray.at(0, 0, 2) = 127;
    gray.at(0, 1, 0) = gray.at(0, 1, 1) = gray.at(0, 1, 2) = 128;
    write_png(gray, dir / "m.png");
    const BinaryMask m = read_mask(dir / "m.png");
    CHECK(m.values == std::vector<std::uint8_t>{0, 1, 0});
    CHECK_THROWS_AS(read_mask_strict(dir / "m.png"), DataError);
    CHECK_THROWS_AS(read_mask(dir / "none.png"), MissingFileError);
    fs::remove_all(dir);
}

TEST_CASE("preprocessing spec validation") {
    PreprocessSpec s;
    s.target_height = 48;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    SynthConfig c;
    c.count = 0;
    CHECK_THROWS(c.validate());
}
