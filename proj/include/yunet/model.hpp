#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "yunet/parameters.hpp"
#include "yunet/tensor.hpp"

namespace yunet {

/// Capacity tiers of the architecture, ordered n < s < m < l < x.
enum class Variant { n, s, m, l, x };

inline constexpr std::array<Variant, 5> kAllVariants{Variant::n, Variant::s, Variant::m, Variant::l,
                                                     Variant::x};

std::string_view to_string(Variant v);
/// Throws ConfigError naming the admissible set for anything but n/s/m/l/x.
Variant parse_variant(std::string_view name);

struct ScaleConfig {
    double depth_multiplier;
    double width_multiplier;
    int max_channels;
};

ScaleConfig scale_config(Variant v);

/// An encoder stage feeding the neck or decoder at the same stride.
struct SkipConnection {
    int source_stage;   // 1..5, stage i has stride 2^i
    int target_stride;  // stride of the consuming neck/decoder stage

    bool operator==(const SkipConnection&) const = default;
};

/// Declarative description of one network instance. Serialized into checkpoints.
struct NetworkSpec {
    Variant variant = Variant::n;
    int in_channels = 3;
    int num_classes = 1;
    std::array<int, 5> stage_channels{};  // P1..P5
    std::array<int, 5> stage_repeats{};   // bottlenecks per stage; the stem has none
    int neck_repeats = 1;
    int head_channels = 8;                // channels of the full-resolution decoder stage
    std::vector<SkipConnection> skip_wiring;

    /// Scaled spec for a named variant.
    static NetworkSpec for_variant(Variant v, int in_channels = 3, int num_classes = 1);

    void validate() const;

    std::string to_json() const;
    static NetworkSpec from_json(std::string_view text);

    bool operator==(const NetworkSpec&) const = default;
};

/// The only wiring the graph builder accepts: P4→16, P3→8, P2→4, P1→2.
std::vector<SkipConnection> canonical_skip_wiring();

template <typename T>
struct FeaturePyramid {
    std::map<int, BasicTensor<T>> levels;  // keyed by stride
};

/// One node of the built graph, used for structural assertions.
struct GraphNode {
    enum class Kind { downsample, upsample, transform };
    std::string name;
    Kind kind = Kind::transform;
    int stride_in = 1;
    int stride_out = 1;
    int skip_stage = 0;  // encoder stage concatenated at this node, 0 for none
};

template <typename T>
struct TraceData;

/// Activations recorded by a training forward pass, consumed by backward.
template <typename T>
class ForwardTrace {
public:
    ForwardTrace();
    ~ForwardTrace();
    ForwardTrace(ForwardTrace&&) noexcept;
    ForwardTrace& operator=(ForwardTrace&&) noexcept;

    TraceData<T>& data() { return *data_; }
    const TraceData<T>& data() const { return *data_; }

private:
    std::unique_ptr<TraceData<T>> data_;
};

template <typename T>
struct NetworkGraph;

/// Encoder-neck-decoder segmentation network. Inference methods are const and
/// safe to call concurrently; parameter mutation needs exclusive access.
template <typename T>
class BasicNetwork {
public:
    BasicNetwork(NetworkSpec spec, std::uint64_t seed);
    BasicNetwork(const BasicNetwork& other);
    BasicNetwork& operator=(const BasicNetwork& other);
    BasicNetwork(BasicNetwork&&) noexcept;
    BasicNetwork& operator=(BasicNetwork&&) noexcept;
    ~BasicNetwork();

    const NetworkSpec& spec() const noexcept { return spec_; }
    const ParameterSet<T>& parameters() const noexcept { return params_; }
    ParameterSet<T>& parameters() noexcept { return params_; }
    std::size_t param_count() const { return params_.scalar_count(); }

    std::vector<GraphNode> graph() const;

    /// Logits of shape (B, num_classes, H, W). H and W must be multiples of 32.
    BasicTensor<T> forward(const BasicTensor<T>& batch) const;
    BasicTensor<T> forward(const BasicTensor<T>& batch, ForwardTrace<T>& trace) const;

    /// Accumulates parameter gradients into grads and returns d(loss)/d(batch).
    BasicTensor<T> backward(const ForwardTrace<T>& trace, const BasicTensor<T>& grad_logits,
                            ParameterSet<T>& grads) const;

    FeaturePyramid<T> encoder_features(const BasicTensor<T>& batch) const;

    /// Same architecture and parameter values in another precision.
    template <typename U>
    BasicNetwork<U> cast() const {
        BasicNetwork<U> out(spec_, 0);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            out.parameters().tensor(i) = tensor_cast<U>(params_.tensor(i));
        }
        return out;
    }

private:
    void check_input(const BasicTensor<T>& batch) const;

    NetworkSpec spec_;
    ParameterSet<T> params_;
    std::unique_ptr<NetworkGraph<T>> graph_;
};

using Network = BasicNetwork<float>;
using NetworkD = BasicNetwork<double>;

Network build_variant(Variant v, int in_channels = 3, int num_classes = 1, std::uint64_t seed = 0);
Network build_variant(std::string_view name, int in_channels = 3, int num_classes = 1,
                      std::uint64_t seed = 0);

template <typename T>
std::size_t param_count(const BasicNetwork<T>& net) {
    return net.param_count();
}

} // namespace yunet
