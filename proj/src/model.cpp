#include "yunet/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "layers.hpp"
#include "yunet/error.hpp"

namespace yunet {

using json = nlohmann::json;

namespace {

constexpr std::array<int, 5> kBaseChannels{64, 128, 256, 512, 1024};
constexpr std::array<int, 5> kBaseRepeats{0, 3, 6, 6, 3};
constexpr int kBaseNeckRepeats = 3;

int scaled_repeats(int base, double depth) {
    if (base == 0) return 0;
    return std::max(1, static_cast<int>(std::lround(base * depth)));
}

int scaled_channels(int base, double width, int cap) {
    // Round to a multiple of 8 as the YOLO-lineage scaling does.
    const int c = static_cast<int>(std::ceil(std::min(base, cap) * width / 8.0)) * 8;
    return std::min(c, cap);
}

} // namespace

std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::n: return "n";
    case Variant::s: return "s";
    case Variant::m: return "m";
    case Variant::l: return "l";
    case Variant::x: return "x";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    for (Variant v : kAllVariants) {
        if (to_string(v) == name) return v;
    }
    throw ConfigError("unknown variant '" + std::string(name) + "'; expected one of {n,s,m,l,x}");
}

ScaleConfig scale_config(Variant v) {
    switch (v) {
    case Variant::n: return {0.50, 0.25, 1024};
    case Variant::s: return {0.50, 0.50, 1024};
    case Variant::m: return {0.50, 1.00, 512};
    case Variant::l: return {1.00, 1.00, 512};
    case Variant::x: return {1.00, 1.50, 512};
    }
    throw ConfigError("unknown variant");
}

std::vector<SkipConnection> canonical_skip_wiring() {
    return {{4, 16}, {3, 8}, {2, 4}, {1, 2}};
}

NetworkSpec NetworkSpec::for_variant(Variant v, int in_channels, int num_classes) {
    const ScaleConfig sc = scale_config(v);
    NetworkSpec spec;
    spec.variant = v;
    spec.in_channels = in_channels;
    spec.num_classes = num_classes;
    for (std::size_t i = 0; i < 5; ++i) {
        spec.stage_channels[i] = scaled_channels(kBaseChannels[i], sc.width_multiplier, sc.max_channels);
        spec.stage_repeats[i] = scaled_repeats(kBaseRepeats[i], sc.depth_multiplier);
    }
    spec.neck_repeats = scaled_repeats(kBaseNeckRepeats, sc.depth_multiplier);
    spec.head_channels = std::max(spec.stage_channels[0] / 2, 4);
    spec.skip_wiring = canonical_skip_wiring();
    spec.validate();
    return spec;
}

void NetworkSpec::validate() const {
    if (in_channels < 1) throw ConfigError("in_channels must be >= 1");
    if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
    for (int c : stage_channels) {
        if (c < 1) throw ConfigError("stage_channels entries must be >= 1");
    }
    if (stage_repeats[0] != 0) throw ConfigError("the stem stage takes no bottleneck repeats");
    for (std::size_t i = 1; i < 5; ++i) {
        if (stage_repeats[i] < 1) throw ConfigError("stage_repeats for P2..P5 must be >= 1");
    }
    if (neck_repeats < 1) throw ConfigError("neck_repeats must be >= 1");
    if (head_channels < 1) throw ConfigError("head_channels must be >= 1");
    if (skip_wiring != canonical_skip_wiring()) {
        throw ConfigError("skip_wiring must be [[4,16],[3,8],[2,4],[1,2]]");
    }
}

std::string NetworkSpec::to_json() const {
    json j;
    j["variant"] = std::string(to_string(variant));
    j["in_channels"] = in_channels;
    j["num_classes"] = num_classes;
    j["stage_channels"] = stage_channels;
    j["stage_repeats"] = stage_repeats;
    j["neck_repeats"] = neck_repeats;
    j["head_channels"] = head_channels;
    json wiring = json::array();
    for (const auto& s : skip_wiring) wiring.push_back({s.source_stage, s.target_stride});
    j["skip_wiring"] = wiring;
    return j.dump(2);
}

NetworkSpec NetworkSpec::from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("network spec is not valid JSON: ") + e.what());
    }
    NetworkSpec spec;
    try {
        spec.variant = parse_variant(j.at("variant").get<std::string>());
        spec.in_channels = j.at("in_channels").get<int>();
        spec.num_classes = j.at("num_classes").get<int>();
        spec.stage_channels = j.at("stage_channels").get<std::array<int, 5>>();
        spec.stage_repeats = j.at("stage_repeats").get<std::array<int, 5>>();
        spec.neck_repeats = j.value("neck_repeats", 1);
        spec.head_channels = j.value("head_channels", std::max(spec.stage_channels[0] / 2, 4));
        if (j.contains("skip_wiring")) {
            for (const auto& e : j.at("skip_wiring")) {
                spec.skip_wiring.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
            }
        } else {
            spec.skip_wiring = canonical_skip_wiring();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("network spec is missing or mistypes a key: ") + e.what());
    }
    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------
// Graph

template <typename T>
struct NetworkGraph {
    detail::ConvBlock<T> stem;
    std::array<detail::ConvBlock<T>, 4> down;
    std::array<detail::CspBlock<T>, 4> stage;
    detail::PoolPyramid<T> pool;
    detail::CspBlock<T> neck16;
    detail::CspBlock<T> neck8;
    detail::ConvBlock<T> dec4;
    detail::ConvBlock<T> dec2;
    detail::ConvBlock<T> dec1;
    detail::Conv2d<T> head;

    NetworkGraph(const NetworkSpec& s, ParameterSet<T>& params, std::uint64_t seed) {
        detail::ParamBuilder<T> b(params, seed);
        const auto& c = s.stage_channels;
        stem = detail::ConvBlock<T>::make(b, "encoder.stem", s.in_channels, c[0], 3, 2);
        for (int i = 0; i < 4; ++i) {
            const std::string prefix = "encoder.stage" + std::to_string(i + 2);
            down[i] = detail::ConvBlock<T>::make(b, prefix + ".down", c[i], c[i + 1], 3, 2);
            stage[i] = detail::CspBlock<T>::make(b, prefix + ".csp", c[i + 1], c[i + 1], s.stage_repeats[i + 1],
                                                 true);
        }
        pool = detail::PoolPyramid<T>::make(b, "encoder.pool", c[4]);
        neck16 = detail::CspBlock<T>::make(b, "neck.stride16", c[4] + c[3], c[3], s.neck_repeats, false);
        neck8 = detail::CspBlock<T>::make(b, "neck.stride8", c[3] + c[2], c[2], s.neck_repeats, false);
        dec4 = detail::ConvBlock<T>::make(b, "decoder.stride4", c[2] + c[1], c[1], 3, 1);
        dec2 = detail::ConvBlock<T>::make(b, "decoder.stride2", c[1] + c[0], c[0], 3, 1);
        dec1 = detail::ConvBlock<T>::make(b, "decoder.stride1", c[0], s.head_channels, 3, 1);
        head = detail::Conv2d<T>::make(b, "head", s.head_channels, s.num_classes, 1, 1, true);
    }
};

template <typename T>
struct TraceData {
    typename detail::ConvBlock<T>::Cache stem;
    std::array<typename detail::ConvBlock<T>::Cache, 4> down;
    std::array<typename detail::CspBlock<T>::Cache, 4> stage;
    typename detail::PoolPyramid<T>::Cache pool;
    typename detail::CspBlock<T>::Cache neck16;
    typename detail::CspBlock<T>::Cache neck8;
    typename detail::ConvBlock<T>::Cache dec4;
    typename detail::ConvBlock<T>::Cache dec2;
    typename detail::ConvBlock<T>::Cache dec1;
    BasicTensor<T> head_input;
    std::array<int, 5> level_channels{};
};

template <typename T>
ForwardTrace<T>::ForwardTrace() : data_(std::make_unique<TraceData<T>>()) {}
template <typename T>
ForwardTrace<T>::~ForwardTrace() = default;
template <typename T>
ForwardTrace<T>::ForwardTrace(ForwardTrace&&) noexcept = default;
template <typename T>
ForwardTrace<T>& ForwardTrace<T>::operator=(ForwardTrace&&) noexcept = default;

namespace {

// Shared forward body; cache == nullptr for inference.
template <typename T>
BasicTensor<T> run_forward(const NetworkGraph<T>& g, const ParameterSet<T>& p, const BasicTensor<T>& x,
                           TraceData<T>* t, FeaturePyramid<T>* pyramid, bool encoder_only) {
    std::array<BasicTensor<T>, 5> level;
    level[0] = g.stem.forward(p, x, t ? &t->stem : nullptr);
    for (int i = 0; i < 4; ++i) {
        BasicTensor<T> d = g.down[i].forward(p, level[i], t ? &t->down[i] : nullptr);
        level[i + 1] = g.stage[i].forward(p, d, t ? &t->stage[i] : nullptr);
    }
    level[4] = g.pool.forward(p, level[4], t ? &t->pool : nullptr);
    if (pyramid) {
        for (int i = 0; i < 5; ++i) pyramid->levels[1 << (i + 1)] = level[i];
    }
    if (encoder_only) return {};
    if (t) {
        for (int i = 0; i < 5; ++i) t->level_channels[i] = level[i].c();
    }

    BasicTensor<T> n16 = g.neck16.forward(p, detail::concat_channels(detail::upsample2x(level[4]), level[3]),
                                          t ? &t->neck16 : nullptr);
    BasicTensor<T> n8 = g.neck8.forward(p, detail::concat_channels(detail::upsample2x(n16), level[2]),
                                        t ? &t->neck8 : nullptr);
    BasicTensor<T> d4 = g.dec4.forward(p, detail::concat_channels(detail::upsample2x(n8), level[1]),
                                       t ? &t->dec4 : nullptr);
    BasicTensor<T> d2 = g.dec2.forward(p, detail::concat_channels(detail::upsample2x(d4), level[0]),
                                       t ? &t->dec2 : nullptr);
    BasicTensor<T> d1 = g.dec1.forward(p, detail::upsample2x(d2), t ? &t->dec1 : nullptr);
    if (t) t->head_input = d1;
    return g.head.forward(p, d1);
}

} // namespace

template <typename T>
BasicNetwork<T>::BasicNetwork(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    spec_.validate();
    graph_ = std::make_unique<NetworkGraph<T>>(spec_, params_, seed);
}

template <typename T>
BasicNetwork<T>::BasicNetwork(const BasicNetwork& other)
    : spec_(other.spec_), params_(other.params_), graph_(std::make_unique<NetworkGraph<T>>(*other.graph_)) {}

template <typename T>
BasicNetwork<T>& BasicNetwork<T>::operator=(const BasicNetwork& other) {
    if (this != &other) {
        spec_ = other.spec_;
        params_ = other.params_;
        graph_ = std::make_unique<NetworkGraph<T>>(*other.graph_);
    }
    return *this;
}

template <typename T>
BasicNetwork<T>::BasicNetwork(BasicNetwork&&) noexcept = default;
template <typename T>
BasicNetwork<T>& BasicNetwork<T>::operator=(BasicNetwork&&) noexcept = default;
template <typename T>
BasicNetwork<T>::~BasicNetwork() = default;

template <typename T>
std::vector<GraphNode> BasicNetwork<T>::graph() const {
    using K = GraphNode::Kind;
    std::vector<GraphNode> nodes;
    nodes.push_back({"encoder.stem", K::downsample, 1, 2, 0});
    for (int i = 0; i < 4; ++i) {
        const int s = 1 << (i + 1);
        nodes.push_back({"encoder.stage" + std::to_string(i + 2) + ".down", K::downsample, s, 2 * s, 0});
        nodes.push_back({"encoder.stage" + std::to_string(i + 2) + ".csp", K::transform, 2 * s, 2 * s, 0});
    }
    nodes.push_back({"encoder.pool", K::transform, 32, 32, 0});
    nodes.push_back({"neck.upsample32", K::upsample, 32, 16, 0});
    nodes.push_back({"neck.stride16", K::transform, 16, 16, 4});
    nodes.push_back({"neck.upsample16", K::upsample, 16, 8, 0});
    nodes.push_back({"neck.stride8", K::transform, 8, 8, 3});
    nodes.push_back({"decoder.upsample8", K::upsample, 8, 4, 0});
    nodes.push_back({"decoder.stride4", K::transform, 4, 4, 2});
    nodes.push_back({"decoder.upsample4", K::upsample, 4, 2, 0});
    nodes.push_back({"decoder.stride2", K::transform, 2, 2, 1});
    nodes.push_back({"decoder.upsample2", K::upsample, 2, 1, 0});
    nodes.push_back({"decoder.stride1", K::transform, 1, 1, 0});
    nodes.push_back({"head", K::transform, 1, 1, 0});
    return nodes;
}

template <typename T>
void BasicNetwork<T>::check_input(const BasicTensor<T>& batch) const {
    if (batch.rank() != 4) {
        throw ShapeError("expected a (B,C,H,W) batch, got " + shape_string(batch.shape()));
    }
    if (batch.n() < 1) throw ShapeError("batch must hold at least one image");
    if (batch.c() != spec_.in_channels) {
        throw ShapeError("expected " + std::to_string(spec_.in_channels) + " input channels, got " +
                         std::to_string(batch.c()));
    }
    if (batch.h() < 32 || batch.w() < 32 || batch.h() % 32 != 0 || batch.w() % 32 != 0) {
        throw ShapeError("input " + std::to_string(batch.h()) + "x" + std::to_string(batch.w()) +
                         " is not divisible by 32; letterbox the image to a multiple of 32 first");
    }
    for (T v : batch.values()) {
        if (!std::isfinite(v)) throw NumericInputError("input batch contains non-finite values");
    }
}

template <typename T>
BasicTensor<T> BasicNetwork<T>::forward(const BasicTensor<T>& batch) const {
    check_input(batch);
    return run_forward(*graph_, params_, batch, static_cast<TraceData<T>*>(nullptr), static_cast<FeaturePyramid<T>*>(nullptr), false);
}

template <typename T>
BasicTensor<T> BasicNetwork<T>::forward(const BasicTensor<T>& batch, ForwardTrace<T>& trace) const {
    check_input(batch);
    trace = ForwardTrace<T>();
    return run_forward(*graph_, params_, batch, &trace.data(), static_cast<FeaturePyramid<T>*>(nullptr), false);
}

template <typename T>
FeaturePyramid<T> BasicNetwork<T>::encoder_features(const BasicTensor<T>& batch) const {
    check_input(batch);
    FeaturePyramid<T> pyramid;
    run_forward(*graph_, params_, batch, static_cast<TraceData<T>*>(nullptr), &pyramid, true);
    return pyramid;
}

template <typename T>
BasicTensor<T> BasicNetwork<T>::backward(const ForwardTrace<T>& trace, const BasicTensor<T>& grad_logits,
                                         ParameterSet<T>& grads) const {
    if (!grads.same_layout(params_)) throw StateError("gradient set does not match the network parameters");
    const auto& g = *graph_;
    const auto& t = trace.data();
    const auto& p = params_;
    const auto& ch = t.level_channels;
    using detail::split_channels;
    using detail::upsample2x_backward;
    using detail::add_inplace;

    BasicTensor<T> d = g.head.backward(p, t.head_input, grad_logits, grads);
    d = upsample2x_backward(g.dec1.backward(p, t.dec1, d, grads));

    auto [dd4_up, dp1] = split_channels(g.dec2.backward(p, t.dec2, d, grads), ch[1]);
    auto [dn8_up, dp2] = split_channels(g.dec4.backward(p, t.dec4, upsample2x_backward(dd4_up), grads), ch[2]);
    auto [dn16_up, dp3] = split_channels(g.neck8.backward(p, t.neck8, upsample2x_backward(dn8_up), grads), ch[3]);
    auto [dp5_up, dp4] = split_channels(g.neck16.backward(p, t.neck16, upsample2x_backward(dn16_up), grads), ch[4]);

    // Accumulated gradient at each encoder level.
    std::array<BasicTensor<T>, 5> dlevel{std::move(dp1), std::move(dp2), std::move(dp3), std::move(dp4),
                                         upsample2x_backward(dp5_up)};
    dlevel[4] = g.pool.backward(p, t.pool, dlevel[4], grads);
    for (int i = 3; i >= 0; --i) {
        BasicTensor<T> dd = g.stage[i].backward(p, t.stage[i], dlevel[i + 1], grads);
        add_inplace(dlevel[i], g.down[i].backward(p, t.down[i], dd, grads));
    }
    return g.stem.backward(p, t.stem, dlevel[0], grads);
}

template class ForwardTrace<float>;
template class ForwardTrace<double>;
template class BasicNetwork<float>;
template class BasicNetwork<double>;

Network build_variant(Variant v, int in_channels, int num_classes, std::uint64_t seed) {
    if (in_channels < 1) throw ConfigError("in_channels must be >= 1");
    if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
    return Network(NetworkSpec::for_variant(v, in_channels, num_classes), seed);
}

Network build_variant(std::string_view name, int in_channels, int num_classes, std::uint64_t seed) {
    return build_variant(parse_variant(name), in_channels, num_classes, seed);
}

} // namespace yunet
