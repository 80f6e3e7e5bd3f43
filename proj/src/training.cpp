#include "yunet/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "yunet/evaluation.hpp"

namespace yunet {

using json = nlohmann::json;

void TrainConfig::validate() const {
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
    if (!(momentum >= 0 && momentum < 1)) throw ConfigError("momentum must lie in [0,1)");
    if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be >= 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (loss_weights.bce < 0 || loss_weights.dice < 0) throw ConfigError("loss weights must be >= 0");
}

// ---------------------------------------------------------------------------
// Loss

template <typename T>
LossResult<T> composite_loss(const BasicTensor<T>& logits, const BasicTensor<T>& target, LossWeights weights) {
    if (logits.shape() != target.shape()) {
        throw ShapeError("logits " + shape_string(logits.shape()) + " and target " + shape_string(target.shape()) +
                         " differ in shape");
    }
    if (logits.empty()) throw ShapeError("loss on an empty tensor");
    for (T t : target.values()) {
        if (t != T{0} && t != T{1}) throw DataError("target values must lie in {0,1}");
    }
    constexpr double smooth = 1.0;
    const std::size_t m = logits.size();
    std::vector<double> prob(m);
    double bce_sum = 0.0;
    double inter = 0.0;
    double prob_sum = 0.0;
    double target_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = logits[i];
        const double t = target[i];
        bce_sum += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
        const double p = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        prob[i] = p;
        inter += p * t;
        prob_sum += p;
        target_sum += t;
    }
    const double denom = prob_sum + target_sum + smooth;
    const double dice = (2.0 * inter + smooth) / denom;

    LossResult<T> out;
    out.bce = bce_sum / static_cast<double>(m);
    out.dice_loss = 1.0 - dice;
    out.total = weights.bce * out.bce + weights.dice * out.dice_loss;
    out.grad = BasicTensor<T>(logits.shape());
    const double dice_num = 2.0 * inter + smooth;
    for (std::size_t i = 0; i < m; ++i) {
        const double p = prob[i];
        const double t = target[i];
        const double d_dice_dp = (2.0 * t * denom - dice_num) / (denom * denom);
        const double g = weights.bce * (p - t) / static_cast<double>(m) - weights.dice * d_dice_dp * p * (1.0 - p);
        out.grad[i] = static_cast<T>(g);
    }
    return out;
}

template LossResult<float> composite_loss(const Tensor&, const Tensor&, LossWeights);
template LossResult<double> composite_loss(const TensorD&, const TensorD&, LossWeights);

// ---------------------------------------------------------------------------
// Optimizer

template <typename T>
void sgd_step(BasicNetwork<T>& net, const ParameterSet<T>& grads, MomentumState<T>& state, const TrainConfig& cfg) {
    ParameterSet<T>& params = net.parameters();
    if (!grads.same_layout(params)) throw StateError("gradient names or shapes do not match the network parameters");
    if (state.empty()) state = params.zeros_like();
    if (!state.same_layout(params)) throw StateError("momentum buffers do not match the network parameters");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        for (T g : grads.tensor(i).values()) {
            if (!std::isfinite(g)) throw NumericError("non-finite gradient for parameter '" + grads.name(i) + "'");
        }
    }
    const T lr = static_cast<T>(cfg.learning_rate);
    const T mu = static_cast<T>(cfg.momentum);
    const T wd = static_cast<T>(cfg.weight_decay);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params.tensor(i).values();
        auto v = state.tensor(i).values();
        auto g = grads.tensor(i).values();
        for (std::size_t k = 0; k < p.size(); ++k) {
            v[k] = mu * v[k] + g[k] + wd * p[k];
            p[k] -= lr * v[k];
        }
    }
}

template void sgd_step(Network&, const ParameterSet<float>&, MomentumState<float>&, const TrainConfig&);
template void sgd_step(NetworkD&, const ParameterSet<double>&, MomentumState<double>&, const TrainConfig&);

// ---------------------------------------------------------------------------
// History

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt_double(*v) : std::string();
}

json metrics_json(const SegmentationMetrics& m) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return {{"accuracy", m.accuracy}, {"precision", opt(m.precision)}, {"recall", opt(m.recall)},
            {"dice", opt(m.dice)},     {"iou", opt(m.iou)},             {"mcr", m.mcr}};
}

SegmentationMetrics metrics_from_json(const json& j) {
    auto opt = [](const json& v) { return v.is_null() ? std::optional<double>() : std::optional<double>(v.get<double>()); };
    SegmentationMetrics m;
    m.accuracy = j.at("accuracy").get<double>();
    m.precision = opt(j.at("precision"));
    m.recall = opt(j.at("recall"));
    m.dice = opt(j.at("dice"));
    m.iou = opt(j.at("iou"));
    m.mcr = j.at("mcr").get<double>();
    return m;
}

json history_json(const TrainHistory& history) {
    json arr = json::array();
    for (const auto& r : history) {
        json j{{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"train_bce", r.train_bce},
               {"train_dice_loss", r.train_dice_loss}};
        if (r.validation) j["validation"] = metrics_json(*r.validation);
        arr.push_back(j);
    }
    return arr;
}

TrainHistory history_from_json(const json& arr) {
    TrainHistory h;
    for (const auto& j : arr) {
        EpochRecord r;
        r.epoch = j.at("epoch").get<int>();
        r.train_loss = j.at("train_loss").get<double>();
        r.train_bce = j.at("train_bce").get<double>();
        r.train_dice_loss = j.at("train_dice_loss").get<double>();
        if (j.contains("validation")) r.validation = metrics_from_json(j.at("validation"));
        h.push_back(r);
    }
    return h;
}

} // namespace

std::string history_to_csv(const TrainHistory& history) {
    std::string out =
        "epoch,train_loss,train_bce,train_dice_loss,val_accuracy,val_precision,val_recall,val_dice,val_iou,val_mcr\n";
    for (const auto& r : history) {
        out += std::to_string(r.epoch) + "," + fmt_double(r.train_loss) + "," + fmt_double(r.train_bce) + "," +
               fmt_double(r.train_dice_loss);
        if (r.validation) {
            const auto& v = *r.validation;
            out += "," + fmt_double(v.accuracy) + "," + fmt_opt(v.precision) + "," + fmt_opt(v.recall) + "," +
                   fmt_opt(v.dice) + "," + fmt_opt(v.iou) + "," + fmt_double(v.mcr);
        } else {
            out += ",,,,,,";
        }
        out += "\n";
    }
    return out;
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    out << history_to_csv(history);
    if (!out) throw IoError("cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// Checkpoints

Checkpoint Checkpoint::capture(const Network& net, const MomentumState<float>& state, int epoch,
                               const TrainHistory& history) {
    Checkpoint c;
    c.spec = net.spec();
    c.parameters = net.parameters();
    c.optimizer_state = state;
    c.epoch = epoch;
    c.history = history;
    return c;
}

Network Checkpoint::restore_network() const {
    Network net(spec, 0);
    if (!net.parameters().same_layout(parameters)) {
        throw SpecMismatchError("checkpoint parameters do not match the architecture described by its spec");
    }
    net.parameters() = parameters;
    return net;
}

namespace {

constexpr char kMagic[8] = {'Y', 'U', 'N', 'E', 'T', 'C', 'K', 'P'};
constexpr char kEndMarker[4] = {'E', 'N', 'D', '!'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 1099511628211ULL;
    }
    return h;
}

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void tensors(const ParameterSet<float>& set) {
        u32(static_cast<std::uint32_t>(set.size()));
        for (std::size_t i = 0; i < set.size(); ++i) {
            str(set.name(i));
            const auto& t = set.tensor(i);
            u32(static_cast<std::uint32_t>(t.rank()));
            for (int d : t.shape()) u32(static_cast<std::uint32_t>(d));
            for (float v : t.values()) u32(std::bit_cast<std::uint32_t>(v));
        }
    }
    std::vector<std::uint8_t>& buffer() { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    void need(std::size_t n) const {
        if (size_ - pos_ < n) throw CorruptContainerError("checkpoint is truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    ParameterSet<float> tensors() {
        ParameterSet<float> set;
        const std::uint32_t count = u32();
        for (std::uint32_t i = 0; i < count; ++i) {
            std::string name = str();
            const std::uint32_t rank = u32();
            if (rank > 8) throw CorruptContainerError("checkpoint array '" + name + "' has implausible rank");
            Shape shape;
            std::size_t volume = 1;
            for (std::uint32_t d = 0; d < rank; ++d) {
                shape.push_back(static_cast<int>(u32()));
                volume *= static_cast<std::size_t>(shape.back());
            }
            need(volume * 4);
            Tensor t(shape);
            for (std::size_t k = 0; k < volume; ++k) t[k] = std::bit_cast<float>(u32());
            set.add(std::move(name), std::move(t));
        }
        return set;
    }
    std::size_t position() const { return pos_; }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    Writer w;
    w.bytes(kMagic, sizeof(kMagic));
    w.u32(kFormatVersion);
    w.str(ckpt.spec.to_json());
    w.u32(static_cast<std::uint32_t>(ckpt.epoch));
    w.tensors(ckpt.parameters);
    w.tensors(ckpt.optimizer_state);
    w.str(history_json(ckpt.history).dump());
    auto& buf = w.buffer();
    const std::uint64_t sum = fnv1a(buf.data() + sizeof(kMagic), buf.size() - sizeof(kMagic));
    w.u64(sum);
    w.bytes(kEndMarker, sizeof(kEndMarker));

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write checkpoint " + path.string());
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!out) throw IoError("cannot write checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError("checkpoint not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint " + path.string());
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < sizeof(kMagic) + 12 || !std::equal(kMagic, kMagic + sizeof(kMagic), buf.begin())) {
        throw CorruptContainerError("not a checkpoint container: " + path.string());
    }
    if (!std::equal(kEndMarker, kEndMarker + 4, buf.end() - 4)) {
        throw CorruptContainerError("checkpoint is truncated: " + path.string());
    }
    const std::size_t payload_end = buf.size() - 4 - 8;
    Reader tail(buf.data() + payload_end, 8);
    if (tail.u64() != fnv1a(buf.data() + sizeof(kMagic), payload_end - sizeof(kMagic))) {
        throw CorruptContainerError("checkpoint checksum mismatch: " + path.string());
    }

    Reader r(buf.data() + sizeof(kMagic), payload_end - sizeof(kMagic));
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion) {
        throw CorruptContainerError("unsupported checkpoint format version " + std::to_string(version));
    }
    Checkpoint c;
    const std::string spec_text = r.str();
    try {
        c.spec = NetworkSpec::from_json(spec_text);
    } catch (const ConfigError& e) {
        throw CorruptContainerError(std::string("checkpoint spec is unreadable: ") + e.what());
    }
    c.epoch = static_cast<int>(r.u32());
    c.parameters = r.tensors();
    c.optimizer_state = r.tensors();
    try {
        c.history = history_from_json(json::parse(r.str()));
    } catch (const json::exception& e) {
        throw CorruptContainerError(std::string("checkpoint history is unreadable: ") + e.what());
    }
    if (r.position() != payload_end - sizeof(kMagic)) {
        throw CorruptContainerError("checkpoint has trailing bytes");
    }

    const Network probe(c.spec, 0);
    if (!probe.parameters().same_layout(c.parameters)) {
        throw SpecMismatchError("checkpoint parameters do not match the embedded network spec");
    }
    if (!c.optimizer_state.empty() && !probe.parameters().same_layout(c.optimizer_state)) {
        throw SpecMismatchError("checkpoint optimizer state does not match the embedded network spec");
    }
    return c;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return splitmix(splitmix(splitmix(a) ^ b) ^ c);
}

} // namespace

Tensor stack_batch(const std::vector<const Tensor*>& items) {
    if (items.empty()) throw ShapeError("cannot stack an empty batch");
    Shape shape = items.front()->shape();
    for (const Tensor* t : items) {
        if (t->shape() != shape) throw ShapeError("batch items differ in shape");
    }
    shape.insert(shape.begin(), static_cast<int>(items.size()));
    Tensor out(shape);
    const std::size_t n = items.front()->size();
    for (std::size_t i = 0; i < items.size(); ++i) std::copy_n(items[i]->data(), n, out.data() + i * n);
    return out;
}

FitResult fit(Network& net, const Dataset& train, const TrainConfig& cfg, const FitOptions& options) {
    cfg.validate();
    const std::size_t n = train.size();
    if (n == 0) throw DataError("training dataset is empty");
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t steps_per_epoch = (n + batch - 1) / batch;

    FitResult result;
    MomentumState<float> state = net.parameters().zeros_like();
    ParameterSet<float> grads = net.parameters().zeros_like();
    Checkpoint last_good = Checkpoint::capture(net, state, 0, result.history);
    double best_iou = -1.0;
    std::vector<std::size_t> order(n);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0));
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        double bce_sum = 0.0;
        double dice_sum = 0.0;
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            const std::size_t begin = step * batch;
            const std::size_t end = std::min(begin + batch, n);
            std::vector<Sample> samples;
            samples.reserve(end - begin);
            for (std::size_t k = begin; k < end; ++k) {
                samples.push_back(train.get(order[k], true, mix_seed(cfg.seed, epoch, order[k] + 1)));
            }
            std::vector<const Tensor*> images;
            std::vector<const Tensor*> masks;
            for (const auto& s : samples) {
                images.push_back(&s.image);
                masks.push_back(&s.mask);
            }
            const Tensor x = stack_batch(images);
            const Tensor y = stack_batch(masks);

            ForwardTrace<float> trace;
            const Tensor logits = net.forward(x, trace);
            LossResult<float> loss = composite_loss(logits, y, cfg.loss_weights);
            if (!std::isfinite(loss.total)) {
                throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch) + ", step " +
                                          std::to_string(step + 1),
                                      last_good);
            }
            grads.zero();
            net.backward(trace, loss.grad, grads);
            try {
                sgd_step(net, grads, state, cfg);
            } catch (const NumericError& e) {
                throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", step " +
                                          std::to_string(step + 1),
                                      last_good);
            }
            ++result.steps;

            const double weight = static_cast<double>(end - begin);
            loss_sum += loss.total * weight;
            bce_sum += loss.bce * weight;
            dice_sum += loss.dice_loss * weight;
            if (options.on_step) options.on_step(static_cast<int>(result.steps), loss.total);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = loss_sum / static_cast<double>(n);
        record.train_bce = bce_sum / static_cast<double>(n);
        record.train_dice_loss = dice_sum / static_cast<double>(n);
        if (options.validation) {
            record.validation = evaluate_segmentation(net, *options.validation, cfg.binarize_threshold).metrics;
        }
        result.history.push_back(record);
        last_good = Checkpoint::capture(net, state, epoch, result.history);
        if (record.validation && record.validation->iou.value_or(0.0) > best_iou) {
            best_iou = record.validation->iou.value_or(0.0);
            result.best_checkpoint = last_good;
        }
        if (options.on_epoch_end) options.on_epoch_end(last_good);
    }
    result.final_checkpoint = std::move(last_good);
    return result;
}

// ---------------------------------------------------------------------------
// Prediction

BinaryMask mask_from_logits(const Tensor& logits, double threshold) {
    if (logits.rank() < 2) throw ShapeError("logits need at least two dimensions");
    const int h = logits.shape()[logits.rank() - 2];
    const int w = logits.shape()[logits.rank() - 1];
    if (logits.size() != static_cast<std::size_t>(h) * w) {
        throw ShapeError("expected single-image single-channel logits, got " + shape_string(logits.shape()));
    }
    BinaryMask m(h, w);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double x = logits[i];
        const double p = 1.0 / (1.0 + std::exp(-x));
        m.values[i] = p >= threshold ? 1 : 0;
    }
    return m;
}

BinaryMask predict_mask(const Network& net, const Tensor& image, double threshold, const LetterboxRecord* letterbox) {
    Tensor batch = image;
    if (batch.rank() == 3) {
        batch.reshape({1, image.dim(0), image.dim(1), image.dim(2)});
    } else if (batch.rank() != 4 || batch.n() != 1) {
        throw ShapeError("predict_mask takes one (3,H,W) image, got " + shape_string(image.shape()));
    }
    if (net.spec().num_classes != 1) throw ShapeError("predict_mask needs a single-class network");
    BinaryMask mask = mask_from_logits(net.forward(batch), threshold);
    if (letterbox) mask = crop_to_content(mask, *letterbox);
    return mask;
}

} // namespace yunet
