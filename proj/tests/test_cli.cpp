#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "yunet/cli.hpp"

using namespace yunet;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "yunet");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {(std::istreambuf_iterator<char>(in)), {}};
}

struct Workspace {
    fs::path root = testing::scratch_dir("cli");
    fs::path synth = root / "synth";
    Workspace() {
        REQUIRE(run({"synth", "--count", "8", "--size", "64", "--seed", "0", "--out", synth.string()}) == 0);
    }
    ~Workspace() { fs::remove_all(root); }
};

} // namespace

TEST_CASE("help exits cleanly") {
    for (const char* sub : {"train", "predict", "skyline", "evaluate", "synth"}) CHECK(run({sub, "--help"}) == 0);
    CHECK(run({}) == kExitConfig);
    CHECK(run({"bogus"}) == kExitConfig);
}

TEST_CASE("synth writes the requested pairs and reruns bitwise") {
    Workspace ws;
    CHECK(fs::exists(ws.synth / "manifest.csv"));
    CHECK(fs::exists(ws.synth / "resolved_config.json"));
    int images = 0;
    for (const auto& e : fs::directory_iterator(ws.synth / "images")) images += e.path().extension() == ".png";
    CHECK(images == 8);
    const fs::path again = ws.root / "again";
    REQUIRE(run({"synth", "--count", "8", "--size", "64", "--seed", "0", "--out", again.string()}) == 0);
    CHECK(slurp(again / "images" / "0005.png") == slurp(ws.synth / "images" / "0005.png"));
    CHECK(slurp(again / "skylines.csv") == slurp(ws.synth / "skylines.csv"));
}

TEST_CASE("train, predict and evaluate end to end") {
    Workspace ws;
    const fs::path run_dir = ws.root / "train";
    REQUIRE(run({"train", "--variant", "n", "--data", ws.synth.string(), "--epochs", "1", "--out",
                 run_dir.string()}) == 0);
    CHECK(fs::exists(run_dir / "checkpoint_final.ckpt"));
    CHECK(fs::exists(run_dir / "history.csv"));
    const auto cfg = nlohmann::json::parse(slurp(run_dir / "resolved_config.json"));
    CHECK(cfg["train"]["epochs"] == 1);
    CHECK(cfg["preprocess"]["size"] == "64x64");

    // The echoed config reproduces the run.
    const fs::path rerun = ws.root / "rerun";
    REQUIRE(run({"train", "--config", (run_dir / "resolved_config.json").string(), "--out", rerun.string()}) == 0);
    CHECK(slurp(rerun / "history.csv") == slurp(run_dir / "history.csv"));

    const fs::path ckpt = run_dir / "checkpoint_final.ckpt";
    const fs::path pred = ws.root / "pred";
    REQUIRE(run({"predict", "--checkpoint", ckpt.string(), "--overlay", "--out", pred.string(),
                 (ws.synth / "images" / "0001.png").string()}) == 0);
    const BinaryMask m = read_mask(pred / "masks" / "0001.png");
    CHECK(m.height == 64);
    CHECK(m.width == 64);
    CHECK(fs::exists(pred / "overlays" / "0001.png"));

    const fs::path ev = ws.root / "eval";
    REQUIRE(run({"evaluate", "--checkpoint", ckpt.string(), "--data", ws.synth.string(), "--out", ev.string()}) == 0);
    const auto summary = nlohmann::json::parse(slurp(ev / "summary.json"));
    for (const char* k : {"accuracy", "precision", "recall", "dice", "iou", "mcr"}) {
        CHECK(summary["segmentation"].contains(k));
    }
    for (const char* k : {"mu", "sigma", "min", "max"}) CHECK(summary["skyline"].contains(k));
    CHECK(fs::exists(ev / "plots" / "pad_histogram.png"));
    CHECK(fs::exists(ev / "table_segmentation.txt"));
}

TEST_CASE("same config and seed give identical history") {
    Workspace ws;
    for (const char* name : {"a", "b"}) {
        REQUIRE(run({"train", "--data", ws.synth.string(), "--epochs", "2", "--seed", "4", "--out",
                     (ws.root / name).string()}) == 0);
    }
    CHECK(slurp(ws.root / "a" / "history.csv") == slurp(ws.root / "b" / "history.csv"));
}

TEST_CASE("perfect predictions evaluate to IoU 1 and zero PAD") {
    Workspace ws;
    const fs::path ev = ws.root / "perfect";
    REQUIRE(run({"evaluate", "--data", ws.synth.string(), "--pred-masks", (ws.synth / "masks").string(), "--out",
                 ev.string()}) == 0);
    const auto s = nlohmann::json::parse(slurp(ev / "summary.json"));
    CHECK(s["segmentation"]["iou"] == 1.0);
    CHECK(s["skyline"]["mu"] == 0.0);
    const std::string csv = slurp(ev / "skyline.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}

TEST_CASE("images without mutually defined columns are excluded and reported") {
    const fs::path root = testing::scratch_dir("cli_excl");
    fs::create_directories(root / "ds" / "images");
    fs::create_directories(root / "ds" / "masks");
    fs::create_directories(root / "pred");
    for (int i = 0; i < 3; ++i) {
        const std::string name = std::to_string(i) + ".png";
        write_png(RgbImage(32, 32), root / "ds" / "images" / name);
        BinaryMask gt(32, 32);
        for (int r = 0; r < 10; ++r) {
            for (int c = 0; c < 32; ++c) gt.at(r, c) = 1;
        }
        write_mask_png(gt, root / "ds" / "masks" / name);
        // Image 2 is predicted all-sky: no defined columns.
        write_mask_png(i == 2 ? BinaryMask(32, 32, 1) : gt, root / "pred" / name);
    }
    const fs::path ev = root / "ev";
    REQUIRE(run({"evaluate", "--layout", "ch1", "--data", (root / "ds").string(), "--pred-masks",
                 (root / "pred").string(), "--out", ev.string()}) == 0);
    const auto s = nlohmann::json::parse(slurp(ev / "summary.json"));
    CHECK(s["skyline"]["excluded"] == 1);
    CHECK(s["skyline"]["images"] == 2);
    const std::string csv = slurp(ev / "skyline.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    fs::remove_all(root);
}

TEST_CASE("skyline command writes W entries and sentinels") {
    const fs::path root = testing::scratch_dir("cli_sky");
    BinaryMask m(20, 30);
    for (int c = 0; c < 30; ++c) {
        for (int r = 0; r < 5 + c % 7; ++r) m.at(r, c) = 1;
    }
    write_mask_png(m, root / "m.png");
    write_mask_png(BinaryMask(6, 4, 1), root / "sky.png");
    std::string scan_csv;
    for (const char* method : {"scan", "sobel"}) {
        const fs::path out = root / method;
        REQUIRE(run({"skyline", "--method", method, "--out", out.string(), (root / "m.png").string(),
                     (root / "sky.png").string()}) == 0);
        const SkylineVector s = SkylineVector::from_csv_line(slurp(out / "skylines" / "m.csv"));
        CHECK(s.rows.size() == 30);
        CHECK(s.rows == testing::brute_skyline(m));
        CHECK(slurp(out / "skylines" / "sky.csv") == "4,6,-1,-1,-1,-1\n");
        CHECK(fs::exists(out / "overlays" / "m.png"));
    }
    fs::remove_all(root);
}

TEST_CASE("error exits are distinct and leave no partial outputs") {
    Workspace ws;
    const fs::path missing = ws.root / "missing_run";
    CHECK(run({"train", "--data", (ws.root / "nope").string(), "--out", missing.string()}) == kExitData);
    CHECK_FALSE(fs::exists(missing));

    CHECK(run({"train", "--data", ws.synth.string(), "--lr", "0", "--out", missing.string()}) == kExitConfig);
    CHECK(run({"train", "--variant", "z", "--data", ws.synth.string(), "--out", missing.string()}) == kExitConfig);
    CHECK_FALSE(fs::exists(missing));

    std::ofstream(ws.root / "bad.ckpt") << "YUNETCKP garbage";
    CHECK(run({"predict", "--checkpoint", (ws.root / "bad.ckpt").string(), "--out", missing.string(),
               (ws.synth / "images" / "0000.png").string()}) == kExitIo);
    CHECK_FALSE(fs::exists(missing));

    RgbImage gray(4, 4);
    for (auto& p : gray.pixels) p = 100;
    write_png(gray, ws.root / "gray.png");
    CHECK(run({"skyline", "--out", missing.string(), (ws.root / "gray.png").string()}) == kExitData);
    CHECK_FALSE(fs::exists(missing));

    std::ofstream(ws.root / "cfg.json") << R"({"train": {"epochz": 3}})";
    CHECK(run({"train", "--config", (ws.root / "cfg.json").string(), "--data", ws.synth.string()}) == kExitConfig);
}

TEST_CASE("default output root comes from the environment") {
    Workspace ws;
    const fs::path root = ws.root / "envroot";
    ::setenv(kOutputRootEnv, root.string().c_str(), 1);
    const int rc = run({"synth", "--count", "1", "--size", "32"});
    ::unsetenv(kOutputRootEnv);
    CHECK(rc == 0);
    CHECK(fs::exists(root / "synth" / "manifest.csv"));
}
