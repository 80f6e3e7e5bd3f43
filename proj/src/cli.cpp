#include "yunet/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "yunet/data.hpp"
#include "yunet/error.hpp"
#include "yunet/evaluation.hpp"
#include "yunet/image.hpp"
#include "yunet/model.hpp"
#include "yunet/skyline.hpp"
#include "yunet/training.hpp"

namespace yunet {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Resolved configuration

struct RunConfig {
    std::uint64_t seed = 0;
    std::string out;
    Variant variant = Variant::n;
    double threshold = 0.5;
    SkylineMethod method = SkylineMethod::sobel;

    TrainConfig train;
    PreprocessSpec preprocess;
    bool auto_size = true;  // smallest multiple-of-32 box holding the data

    std::string data;
    DatasetLayout layout = DatasetLayout::synthetic;
    std::string val_data;
    DatasetLayout val_layout = DatasetLayout::synthetic;
    double val_fraction = 0.0;

    SynthConfig synth;
    EdgeParams edges;

    std::string checkpoint;
    std::string mode = "both";
};

/// Values given on the command line; unset ones fall back to the config file.
struct Flags {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> variant;
    std::optional<double> threshold;
    std::optional<std::string> method;

    std::optional<std::string> data, layout, val_data, val_layout, size;
    std::optional<double> val_fraction, lr, momentum, weight_decay, bce_weight, dice_weight, flip;
    std::optional<int> epochs, batch_size;

    std::optional<int> count, frequency;
    std::optional<double> amplitude, jitter, noise, texture;

    std::optional<std::string> checkpoint, mode, pred_masks;
    std::vector<std::string> inputs;
    bool overlay = false;
    bool no_plots = false;
};

std::string size_string(const RunConfig& cfg) {
    if (cfg.auto_size) return "auto";
    return std::to_string(cfg.preprocess.target_height) + "x" + std::to_string(cfg.preprocess.target_width);
}

void parse_size(const std::string& text, RunConfig& cfg) {
    if (text == "auto") {
        cfg.auto_size = true;
        return;
    }
    int h = 0;
    int w = 0;
    char x = 0;
    std::istringstream in(text);
    if (!(in >> h)) throw ConfigError("bad size '" + text + "' (expected auto, N or HxW)");
    if (in >> x) {
        if ((x != 'x' && x != 'X') || !(in >> w)) throw ConfigError("bad size '" + text + "' (expected HxW)");
    } else {
        w = h;
    }
    if (h < 32 || w < 32 || h % 32 != 0 || w % 32 != 0) {
        throw ConfigError("size " + text + " must be positive multiples of 32");
    }
    cfg.auto_size = false;
    cfg.preprocess.target_height = h;
    cfg.preprocess.target_width = w;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [k, _] : j.items()) {
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
    }
}

template <typename V>
void read_key(const json& j, const char* key, V& target) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<V>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

void apply_config_file(const fs::path& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    check_keys(j, {"seed", "out", "variant", "threshold", "method", "train", "preprocess", "data", "synth", "edges",
                   "checkpoint", "mode"},
               "config");
    read_key(j, "seed", cfg.seed);
    read_key(j, "out", cfg.out);
    read_key(j, "threshold", cfg.threshold);
    read_key(j, "checkpoint", cfg.checkpoint);
    read_key(j, "mode", cfg.mode);
    if (j.contains("variant")) cfg.variant = parse_variant(j["variant"].get<std::string>());
    if (j.contains("method")) cfg.method = parse_skyline_method(j["method"].get<std::string>());
    if (j.contains("train")) {
        const json& t = j["train"];
        check_keys(t, {"learning_rate", "momentum", "weight_decay", "epochs", "batch_size", "bce_weight",
                       "dice_weight"},
                   "train");
        read_key(t, "learning_rate", cfg.train.learning_rate);
        read_key(t, "momentum", cfg.train.momentum);
        read_key(t, "weight_decay", cfg.train.weight_decay);
        read_key(t, "epochs", cfg.train.epochs);
        read_key(t, "batch_size", cfg.train.batch_size);
        read_key(t, "bce_weight", cfg.train.loss_weights.bce);
        read_key(t, "dice_weight", cfg.train.loss_weights.dice);
    }
    if (j.contains("preprocess")) {
        const json& p = j["preprocess"];
        check_keys(p, {"size", "fill", "mean", "scale", "flip_probability"}, "preprocess");
        if (p.contains("size")) parse_size(p["size"].get<std::string>(), cfg);
        int fill = cfg.preprocess.fill;
        read_key(p, "fill", fill);
        if (fill < 0 || fill > 255) throw ConfigError("preprocess.fill must lie in [0,255]");
        cfg.preprocess.fill = static_cast<std::uint8_t>(fill);
        read_key(p, "mean", cfg.preprocess.mean);
        read_key(p, "scale", cfg.preprocess.scale);
        read_key(p, "flip_probability", cfg.preprocess.flip_probability);
    }
    if (j.contains("data")) {
        const json& d = j["data"];
        check_keys(d, {"root", "layout", "val_root", "val_layout", "val_fraction"}, "data");
        read_key(d, "root", cfg.data);
        read_key(d, "val_root", cfg.val_data);
        read_key(d, "val_fraction", cfg.val_fraction);
        if (d.contains("layout")) cfg.layout = parse_layout(d["layout"].get<std::string>());
        if (d.contains("val_layout")) cfg.val_layout = parse_layout(d["val_layout"].get<std::string>());
    }
    if (j.contains("synth")) {
        const json& s = j["synth"];
        check_keys(s, {"count", "height", "width", "amplitude", "frequency", "lighting_jitter", "noise",
                       "ground_texture"},
                   "synth");
        read_key(s, "count", cfg.synth.count);
        read_key(s, "height", cfg.synth.height);
        read_key(s, "width", cfg.synth.width);
        read_key(s, "amplitude", cfg.synth.amplitude);
        read_key(s, "frequency", cfg.synth.frequency);
        read_key(s, "lighting_jitter", cfg.synth.lighting_jitter);
        read_key(s, "noise", cfg.synth.noise);
        read_key(s, "ground_texture", cfg.synth.ground_texture);
    }
    if (j.contains("edges")) {
        const json& e = j["edges"];
        check_keys(e, {"sobel_threshold", "canny_sigma", "canny_low", "canny_high"}, "edges");
        read_key(e, "sobel_threshold", cfg.edges.sobel_threshold);
        read_key(e, "canny_sigma", cfg.edges.canny_sigma);
        read_key(e, "canny_low", cfg.edges.canny_low);
        read_key(e, "canny_high", cfg.edges.canny_high);
    }
}

json to_json(const RunConfig& cfg) {
    return {
        {"seed", cfg.seed},
        {"out", cfg.out},
        {"variant", std::string(to_string(cfg.variant))},
        {"threshold", cfg.threshold},
        {"method", std::string(to_string(cfg.method))},
        {"checkpoint", cfg.checkpoint},
        {"mode", cfg.mode},
        {"train",
         {{"learning_rate", cfg.train.learning_rate},
          {"momentum", cfg.train.momentum},
          {"weight_decay", cfg.train.weight_decay},
          {"epochs", cfg.train.epochs},
          {"batch_size", cfg.train.batch_size},
          {"bce_weight", cfg.train.loss_weights.bce},
          {"dice_weight", cfg.train.loss_weights.dice}}},
        {"preprocess",
         {{"size", size_string(cfg)},
          {"fill", static_cast<int>(cfg.preprocess.fill)},
          {"mean", cfg.preprocess.mean},
          {"scale", cfg.preprocess.scale},
          {"flip_probability", cfg.preprocess.flip_probability}}},
        {"data",
         {{"root", cfg.data},
          {"layout", std::string(to_string(cfg.layout))},
          {"val_root", cfg.val_data},
          {"val_layout", std::string(to_string(cfg.val_layout))},
          {"val_fraction", cfg.val_fraction}}},
        {"synth",
         {{"count", cfg.synth.count},
          {"height", cfg.synth.height},
          {"width", cfg.synth.width},
          {"amplitude", cfg.synth.amplitude},
          {"frequency", cfg.synth.frequency},
          {"lighting_jitter", cfg.synth.lighting_jitter},
          {"noise", cfg.synth.noise},
          {"ground_texture", cfg.synth.ground_texture}}},
        {"edges",
         {{"sobel_threshold", cfg.edges.sobel_threshold},
          {"canny_sigma", cfg.edges.canny_sigma},
          {"canny_low", cfg.edges.canny_low},
          {"canny_high", cfg.edges.canny_high}}},
    };
}

RunConfig resolve(const Flags& f, const std::string& command) {
    RunConfig cfg;
    if (f.config) apply_config_file(*f.config, cfg);
    if (f.seed) cfg.seed = *f.seed;
    if (f.out) cfg.out = *f.out;
    if (f.variant) cfg.variant = parse_variant(*f.variant);
    if (f.threshold) cfg.threshold = *f.threshold;
    if (f.method) cfg.method = parse_skyline_method(*f.method);
    if (f.data) cfg.data = *f.data;
    if (f.layout) cfg.layout = parse_layout(*f.layout);
    if (f.val_data) cfg.val_data = *f.val_data;
    if (f.val_layout) cfg.val_layout = parse_layout(*f.val_layout);
    if (f.val_fraction) cfg.val_fraction = *f.val_fraction;
    if (f.size) parse_size(*f.size, cfg);
    if (f.lr) cfg.train.learning_rate = *f.lr;
    if (f.momentum) cfg.train.momentum = *f.momentum;
    if (f.weight_decay) cfg.train.weight_decay = *f.weight_decay;
    if (f.bce_weight) cfg.train.loss_weights.bce = *f.bce_weight;
    if (f.dice_weight) cfg.train.loss_weights.dice = *f.dice_weight;
    if (f.flip) cfg.preprocess.flip_probability = *f.flip;
    if (f.epochs) cfg.train.epochs = *f.epochs;
    if (f.batch_size) cfg.train.batch_size = *f.batch_size;
    if (f.count) cfg.synth.count = *f.count;
    if (f.frequency) cfg.synth.frequency = *f.frequency;
    if (f.amplitude) cfg.synth.amplitude = *f.amplitude;
    if (f.jitter) cfg.synth.lighting_jitter = *f.jitter;
    if (f.noise) cfg.synth.noise = *f.noise;
    if (f.texture) cfg.synth.ground_texture = *f.texture;
    if (f.checkpoint) cfg.checkpoint = *f.checkpoint;
    if (f.mode) cfg.mode = *f.mode;

    cfg.train.seed = cfg.seed;
    cfg.synth.seed = cfg.seed;
    cfg.train.binarize_threshold = cfg.threshold;
    if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) throw ConfigError("threshold must lie in (0,1)");
    if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0) throw ConfigError("val_fraction must lie in [0,1)");
    if (cfg.mode != "segmentation" && cfg.mode != "skyline" && cfg.mode != "both") {
        throw ConfigError("mode must be one of {segmentation, skyline, both}, got '" + cfg.mode + "'");
    }
    cfg.train.validate();
    cfg.preprocess.validate();
    if (cfg.out.empty()) {
        const char* root = std::getenv(kOutputRootEnv);
        cfg.out = (fs::path(root && *root ? root : "runs") / command).string();
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Output handling

/// Removes a freshly created output directory unless the run commits it.
class OutputDir {
public:
    explicit OutputDir(const fs::path& path) : path_(path) {
        std::error_code ec;
        created_ = !fs::exists(path_, ec);
        fs::create_directories(path_, ec);
        if (ec || !fs::is_directory(path_)) throw IoError("cannot create output directory " + path_.string());
    }
    ~OutputDir() {
        if (created_ && !committed_) {
            std::error_code ec;
            fs::remove_all(path_, ec);
        }
    }
    OutputDir(const OutputDir&) = delete;
    OutputDir& operator=(const OutputDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path sub(const std::string& name) const {
        fs::path p = path_ / name;
        fs::create_directories(p);
        return p;
    }
    void commit() { committed_ = true; }

private:
    fs::path path_;
    bool created_ = false;
    bool committed_ = false;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw IoError("cannot write " + path.string());
}

void write_resolved_config(const OutputDir& dir, const RunConfig& cfg) {
    write_text(dir.path() / "resolved_config.json", to_json(cfg).dump(2) + "\n");
}

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

/// Files as given plus the image files directly inside given directories.
std::vector<fs::path> collect_inputs(const std::vector<std::string>& inputs) {
    if (inputs.empty()) throw ConfigError("no input files given");
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p)) {
                if (e.is_regular_file() && is_image_file(e.path())) found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else if (fs::is_regular_file(p)) {
            files.push_back(p);
        } else {
            throw DataError("input does not exist: " + in);
        }
    }
    if (files.empty()) throw DataError("no image files among the inputs");
    return files;
}

int round_up32(int v) { return (v + 31) / 32 * 32; }

/// Fills the preprocessing box from the largest image when the size is automatic.
void resolve_size(RunConfig& cfg, const DatasetManifest& m) {
    if (!cfg.auto_size) return;
    int h = 32;
    int w = 32;
    for (const auto& e : m.entries) {
        h = std::max(h, round_up32(e.height));
        w = std::max(w, round_up32(e.width));
    }
    cfg.preprocess.target_height = h;
    cfg.preprocess.target_width = w;
    cfg.auto_size = false;
}

DatasetManifest load_manifest(const std::string& root, DatasetLayout layout, const char* what) {
    if (root.empty()) throw DataError(std::string("no ") + what + " dataset given (use --data)");
    DatasetManifest m = scan_dataset(root, layout);
    for (const auto& r : m.rejects) {
        std::fprintf(stderr, "warning: skipped %s: %s\n", r.path.string().c_str(), r.reason.c_str());
    }
    return m;
}

std::string method_label(Variant v) { return "YUNet-" + std::string(to_string(v)); }

/// Sky tinted blue and the skyline drawn on top.
RgbImage sky_overlay(const RgbImage& image, const BinaryMask& mask, const SkylineVector& skyline) {
    RgbImage out = image;
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            if (!mask.at(r, c)) continue;
            out.at(r, c, 0) = static_cast<std::uint8_t>(out.at(r, c, 0) / 2);
            out.at(r, c, 1) = static_cast<std::uint8_t>(out.at(r, c, 1) / 2 + 40);
            out.at(r, c, 2) = static_cast<std::uint8_t>(out.at(r, c, 2) / 2 + 127);
        }
    }
    return render_skyline_overlay(out, skyline);
}

RgbImage mask_as_rgb(const BinaryMask& mask) {
    RgbImage out(mask.height, mask.width);
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            const std::uint8_t v = mask.at(r, c) ? 255 : 0;
            for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = v;
        }
    }
    return out;
}

/// Prediction at the source resolution.
BinaryMask predict_full_resolution(const Network& net, const RgbImage& image, const RunConfig& cfg) {
    const int th = cfg.auto_size ? round_up32(image.height) : cfg.preprocess.target_height;
    const int tw = cfg.auto_size ? round_up32(image.width) : cfg.preprocess.target_width;
    const LetterboxRecord rec = compute_letterbox(image.height, image.width, th, tw);
    const Tensor t = image_to_tensor(letterbox_image(image, rec, cfg.preprocess.fill), cfg.preprocess);
    const BinaryMask content = predict_mask(net, t, cfg.threshold, &rec);
    return resize_nearest(content, image.height, image.width);
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_train(const Flags& flags) {
    RunConfig cfg = resolve(flags, "train");
    DatasetManifest train_m = load_manifest(cfg.data, cfg.layout, "training");
    std::optional<DatasetManifest> val_m;
    if (!cfg.val_data.empty()) {
        val_m = load_manifest(cfg.val_data, cfg.val_layout, "validation");
    } else if (cfg.val_fraction > 0.0) {
        auto [tr, va] = split_manifest(train_m, {1.0 - cfg.val_fraction, cfg.val_fraction}, cfg.seed);
        train_m = std::move(tr);
        val_m = std::move(va);
    }
    DatasetManifest all = train_m;
    if (val_m) all.entries.insert(all.entries.end(), val_m->entries.begin(), val_m->entries.end());
    resolve_size(cfg, all);

    ManifestDataset train(train_m, cfg.preprocess);
    std::optional<ManifestDataset> val;
    if (val_m) val.emplace(*val_m, cfg.preprocess);
    // Decode everything once up front so a bad file fails before any output exists.
    for (std::size_t i = 0; i < train.size(); ++i) (void)train.get(i, false, 0);
    if (val) {
        for (std::size_t i = 0; i < val->size(); ++i) (void)val->get(i, false, 0);
    }

    Network net = build_variant(cfg.variant, 3, 1, cfg.seed);
    OutputDir dir(cfg.out);
    write_resolved_config(dir, cfg);
    std::fprintf(stderr, "training %s (%zu parameters) on %zu images, %d epochs, out=%s\n",
                 method_label(cfg.variant).c_str(), net.param_count(), train.size(), cfg.train.epochs,
                 dir.path().string().c_str());

    FitOptions opts;
    if (val) opts.validation = &*val;
    opts.on_epoch_end = [&](const Checkpoint& ckpt) {
        const EpochRecord& r = ckpt.history.back();
        if (r.validation && r.validation->iou) {
            std::fprintf(stderr, "epoch %d/%d loss %.6f val_iou %.4f\n", r.epoch, cfg.train.epochs, r.train_loss,
                         *r.validation->iou);
        } else {
            std::fprintf(stderr, "epoch %d/%d loss %.6f\n", r.epoch, cfg.train.epochs, r.train_loss);
        }
        save_checkpoint(ckpt, dir.path() / "checkpoint_final.ckpt");
    };

    FitResult result;
    try {
        result = fit(net, train, cfg.train, opts);
    } catch (const DivergenceError& e) {
        save_checkpoint(e.last_good(), dir.path() / "checkpoint_last_good.ckpt");
        write_history_csv(e.last_good().history, dir.path() / "history.csv");
        dir.commit();
        throw;
    }
    save_checkpoint(result.final_checkpoint, dir.path() / "checkpoint_final.ckpt");
    if (result.best_checkpoint) save_checkpoint(*result.best_checkpoint, dir.path() / "checkpoint_best.ckpt");
    write_history_csv(result.history, dir.path() / "history.csv");
    dir.commit();
    std::printf("%s\n", (dir.path() / "checkpoint_final.ckpt").string().c_str());
    return kExitOk;
}

Network load_network(const RunConfig& cfg) {
    if (cfg.checkpoint.empty()) throw ConfigError("--checkpoint is required");
    return load_checkpoint(cfg.checkpoint).restore_network();
}

int cmd_predict(const Flags& flags) {
    RunConfig cfg = resolve(flags, "predict");
    const Network net = load_network(cfg);
    const std::vector<fs::path> files = collect_inputs(flags.inputs);
    for (const auto& f : files) (void)read_image_size(f);

    OutputDir dir(cfg.out);
    write_resolved_config(dir, cfg);
    const fs::path masks = dir.sub("masks");
    const fs::path overlays = flags.overlay ? dir.sub("overlays") : fs::path();
    for (const auto& f : files) {
        const RgbImage image = read_rgb(f);
        const BinaryMask mask = predict_full_resolution(net, image, cfg);
        const std::string stem = f.stem().string();
        write_mask_png(mask, masks / (stem + ".png"));
        if (flags.overlay) {
            write_png(sky_overlay(image, mask, extract_skyline(mask, cfg.method, cfg.edges)),
                      overlays / (stem + ".png"));
        }
    }
    dir.commit();
    std::fprintf(stderr, "wrote %zu mask(s) to %s\n", files.size(), masks.string().c_str());
    return kExitOk;
}

int cmd_skyline(const Flags& flags) {
    RunConfig cfg = resolve(flags, "skyline");
    const std::vector<fs::path> files = collect_inputs(flags.inputs);
    std::optional<Network> net;
    if (!cfg.checkpoint.empty()) net.emplace(load_network(cfg));

    // Inputs are masks, or images when a checkpoint is given.
    std::vector<BinaryMask> masks;
    std::vector<RgbImage> images;
    for (const auto& f : files) {
        if (net) {
            images.push_back(read_rgb(f));
            masks.push_back(predict_full_resolution(*net, images.back(), cfg));
        } else {
            masks.push_back(read_mask_strict(f));
            images.push_back(mask_as_rgb(masks.back()));
        }
    }

    OutputDir dir(cfg.out);
    write_resolved_config(dir, cfg);
    const fs::path csvs = dir.sub("skylines");
    const fs::path overlays = dir.sub("overlays");
    std::string combined = "image,width,height,rows\n";
    for (std::size_t i = 0; i < files.size(); ++i) {
        const SkylineVector s = extract_skyline(masks[i], cfg.method, cfg.edges);
        const std::string stem = files[i].stem().string();
        write_text(csvs / (stem + ".csv"), s.to_csv_line() + "\n");
        write_png(render_skyline_overlay(images[i], s), overlays / (stem + ".png"));
        combined += stem + "," + s.to_csv_line() + "\n";
    }
    write_text(dir.path() / "skylines.csv", combined);
    dir.commit();
    std::fprintf(stderr, "wrote %zu skyline(s) to %s\n", files.size(), csvs.string().c_str());
    return kExitOk;
}

std::string entry_id(const ManifestEntry& e, DatasetLayout layout) {
    const std::string stem = e.image_path.stem().string();
    return layout == DatasetLayout::skyfinder ? e.site_id + "/" + stem : stem;
}

/// Pairs precomputed prediction masks with the dataset masks at the source resolution.
std::vector<MaskPair> pairs_from_directory(const fs::path& pred_dir, const DatasetManifest& m) {
    if (!fs::is_directory(pred_dir)) throw DataError("prediction directory does not exist: " + pred_dir.string());
    std::vector<MaskPair> pairs;
    for (const auto& e : m.entries) {
        const std::string id = entry_id(e, m.layout);
        const fs::path p = pred_dir / (id + ".png");
        if (!fs::exists(p)) throw DataError("no predicted mask for " + id + " (expected " + p.string() + ")");
        MaskPair pair{id, read_mask(p), read_mask(e.mask_path)};
        if (pair.pred.height != pair.gt.height || pair.pred.width != pair.gt.width) {
            throw DataError("predicted mask " + p.string() + " differs in size from its ground truth");
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

int cmd_evaluate(const Flags& flags) {
    RunConfig cfg = resolve(flags, "evaluate");
    const DatasetManifest m = load_manifest(cfg.data, cfg.layout, "evaluation");
    if (m.entries.empty()) throw DataError("evaluation dataset is empty");

    std::vector<MaskPair> pairs;
    std::string label = "prediction";
    if (flags.pred_masks) {
        pairs = pairs_from_directory(*flags.pred_masks, m);
    } else {
        const Checkpoint ckpt = load_checkpoint(cfg.checkpoint.empty() ? throw ConfigError(
                                                                             "--checkpoint or --pred-masks is required")
                                                                       : cfg.checkpoint);
        const Network net = ckpt.restore_network();
        label = method_label(ckpt.spec.variant);
        resolve_size(cfg, m);
        ManifestDataset data(m, cfg.preprocess);
        pairs = predict_pairs(net, data, cfg.threshold);
        for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].id = entry_id(m.entries[i], m.layout);
    }

    const bool do_seg = cfg.mode != "skyline";
    const bool do_sky = cfg.mode != "segmentation";
    std::optional<SegmentationReport> seg;
    std::optional<SkylineReport> sky;
    if (do_seg) seg = evaluate_segmentation(pairs);
    if (do_sky) sky = evaluate_skyline(pairs, cfg.method, cfg.edges);

    OutputDir dir(cfg.out);
    write_resolved_config(dir, cfg);
    const std::string dataset = std::string(to_string(cfg.layout)) + ":" + cfg.data;
    write_text(dir.path() / "summary.json", summary_json(seg ? &*seg : nullptr, sky ? &*sky : nullptr, dataset) + "\n");
    std::string tables;
    if (seg) {
        write_text(dir.path() / "segmentation.csv", segmentation_csv(*seg));
        const std::string t = segmentation_table(*seg, label);
        write_text(dir.path() / "table_segmentation.txt", t);
        tables += t;
    }
    if (sky) {
        write_text(dir.path() / "skyline.csv", skyline_csv(*sky));
        const std::string t = skyline_table(*sky, label);
        write_text(dir.path() / "table_skyline.txt", t);
        tables += (tables.empty() ? "" : "\n") + t;
        for (const auto& id : sky->excluded) {
            std::fprintf(stderr, "excluded %s: no column defined in both skylines\n", id.c_str());
        }
    }
    if (!flags.no_plots) {
        const fs::path plots = dir.sub("plots");
        if (seg) {
            std::vector<double> ious;
            for (const auto& r : seg->rows) {
                if (r.metrics.iou) ious.push_back(*r.metrics.iou);
            }
            write_histogram_png(ious, "per-image IoU", plots / "iou_histogram.png");
        }
        if (sky) {
            std::vector<double> pads;
            for (const auto& r : sky->rows) pads.push_back(r.pad.e);
            write_histogram_png(pads, "per-image PAD (px)", plots / "pad_histogram.png");
        }
    }
    dir.commit();
    std::printf("%s", tables.c_str());
    return kExitOk;
}

int cmd_synth(const Flags& flags) {
    RunConfig cfg = resolve(flags, "synth");
    if (flags.size) {
        if (cfg.auto_size) throw ConfigError("synth needs an explicit --size");
        cfg.synth.height = cfg.preprocess.target_height;
        cfg.synth.width = cfg.preprocess.target_width;
    }
    cfg.synth.validate();
    OutputDir dir(cfg.out);
    const DatasetManifest m = generate_synthetic(cfg.synth, dir.path());
    write_resolved_config(dir, cfg);
    dir.commit();
    std::fprintf(stderr, "wrote %zu synthetic samples to %s\n", m.entries.size(), dir.path().string().c_str());
    return kExitOk;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config:
            return kExitConfig;
        case ErrorKind::shape:
        case ErrorKind::numeric_input:
        case ErrorKind::data:
        case ErrorKind::no_overlap:
            return kExitData;
        case ErrorKind::numeric:
            return kExitNumeric;
        case ErrorKind::state:
        case ErrorKind::io:
        case ErrorKind::missing_file:
        case ErrorKind::corrupt_container:
        case ErrorKind::spec_mismatch:
            return kExitIo;
    }
    return kExitInternal;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Sky segmentation and skyline extraction toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    app.footer("Exit codes: 0 ok, 1 internal, 2 config, 3 data, 4 numeric, 5 io/checkpoint.\n"
               "Default output root: $" + std::string(kOutputRootEnv) + " (else ./runs), one subdirectory per command.");

    Flags f;
    app.add_option("--config", f.config, "JSON config file; flags take precedence")->check(CLI::ExistingFile);
    app.add_option("--seed", f.seed, "Seed for initialization, shuffling and synthesis");
    app.add_option("--out", f.out, "Output directory");
    app.add_option("--variant", f.variant, "Model variant {n,s,m,l,x}");
    app.add_option("--threshold", f.threshold, "Sky probability threshold (p >= t is sky)");
    app.add_option("--method", f.method, "Skyline extraction {canny,sobel,scan}");

    auto add_data = [&](CLI::App* sub) {
        sub->add_option("--data", f.data, "Dataset root");
        sub->add_option("--layout", f.layout, "Dataset layout {skyfinder,ch1,synthetic}");
        sub->add_option("--size", f.size, "Letterbox size: auto, N or HxW (multiples of 32)");
    };

    CLI::App* train = app.add_subcommand("train", "Train a model");
    add_data(train);
    train->add_option("--val-data", f.val_data, "Validation dataset root");
    train->add_option("--val-layout", f.val_layout, "Validation dataset layout");
    train->add_option("--val-fraction", f.val_fraction, "Hold out this share of --data for validation");
    train->add_option("--epochs", f.epochs);
    train->add_option("--batch-size", f.batch_size);
    train->add_option("--lr", f.lr, "Learning rate");
    train->add_option("--momentum", f.momentum);
    train->add_option("--weight-decay", f.weight_decay);
    train->add_option("--bce-weight", f.bce_weight);
    train->add_option("--dice-weight", f.dice_weight);
    train->add_option("--flip", f.flip, "Horizontal flip probability");

    CLI::App* predict = app.add_subcommand("predict", "Predict sky masks for images");
    predict->add_option("--checkpoint", f.checkpoint, "Checkpoint file");
    predict->add_option("--size", f.size, "Letterbox size: auto, N or HxW");
    predict->add_flag("--overlay", f.overlay, "Also write overlay PNGs");
    predict->add_option("inputs", f.inputs, "Image files or directories")->required();

    CLI::App* skyline = app.add_subcommand("skyline", "Extract skyline vectors from masks (or images with --checkpoint)");
    skyline->add_option("--checkpoint", f.checkpoint, "Predict masks from images first");
    skyline->add_option("--size", f.size, "Letterbox size when predicting");
    skyline->add_option("inputs", f.inputs, "Mask files, image files or directories")->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate against a labeled dataset");
    add_data(evaluate);
    evaluate->add_option("--checkpoint", f.checkpoint, "Checkpoint file");
    evaluate->add_option("--pred-masks", f.pred_masks, "Evaluate precomputed masks named <id>.png instead");
    evaluate->add_option("--mode", f.mode, "{segmentation,skyline,both}");
    evaluate->add_flag("--no-plots", f.no_plots, "Skip histogram PNGs");

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic skyline dataset");
    synth->add_option("--count", f.count);
    synth->add_option("--size", f.size, "N or HxW");
    synth->add_option("--amplitude", f.amplitude, "Horizon roughness, share of height");
    synth->add_option("--frequency", f.frequency, "Highest horizon frequency");
    synth->add_option("--jitter", f.jitter, "Lighting jitter");
    synth->add_option("--noise", f.noise, "Pixel noise standard deviation, share of 255");
    synth->add_option("--texture", f.texture, "Ground texture strength");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (train->parsed()) return cmd_train(f);
        if (predict->parsed()) return cmd_predict(f);
        if (skyline->parsed()) return cmd_skyline(f);
        if (evaluate->parsed()) return cmd_evaluate(f);
        if (synth->parsed()) return cmd_synth(f);
    } catch (const Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", std::string(to_string(e.kind())).c_str(), e.what());
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error [io]: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInternal;
    }
    return kExitConfig;
}

} // namespace yunet
