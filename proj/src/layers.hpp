#pragma once

// Layer primitives with hand-written backward passes. Internal to the library.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "yunet/parameters.hpp"
#include "yunet/tensor.hpp"

namespace yunet::detail {

/// Registers parameters under a dotted name prefix and draws their initial values.
template <typename T>
class ParamBuilder {
public:
    ParamBuilder(ParameterSet<T>& params, std::uint64_t seed) : params_(params), rng_(seed) {}

    std::size_t kaiming(const std::string& name, Shape shape, int fan_in);
    std::size_t constant(const std::string& name, Shape shape, T value);

private:
    ParameterSet<T>& params_;
    std::mt19937_64 rng_;
};

template <typename T>
struct Conv2d {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;
    int stride = 1;
    int pad = 0;
    std::size_t weight = 0;
    long bias = -1;

    static Conv2d make(ParamBuilder<T>& b, const std::string& name, int in, int out, int kernel,
                       int stride, bool with_bias);

    Shape output_shape(const Shape& in) const;
    BasicTensor<T> forward(const ParameterSet<T>& p, const BasicTensor<T>& x) const;
    /// Adds dW (and db) into g, returns dx.
    BasicTensor<T> backward(const ParameterSet<T>& p, const BasicTensor<T>& x, const BasicTensor<T>& dy,
                            ParameterSet<T>& g) const;
};

template <typename T>
struct GroupNorm {
    int channels = 0;
    int groups = 1;
    std::size_t gamma = 0;
    std::size_t beta = 0;
    double eps = 1e-5;

    struct Cache {
        BasicTensor<T> normalized;
        std::vector<T> inv_std;  // one per (sample, group)
    };

    static GroupNorm make(ParamBuilder<T>& b, const std::string& name, int channels);

    BasicTensor<T> forward(const ParameterSet<T>& p, const BasicTensor<T>& x, Cache* cache) const;
    BasicTensor<T> backward(const ParameterSet<T>& p, const Cache& cache, const BasicTensor<T>& dy,
                            ParameterSet<T>& g) const;
};

/// Largest group count in {8,4,2,1} dividing channels while leaving at least two channels per group.
int group_count(int channels);

/// Convolution, group normalization, SiLU.
template <typename T>
struct ConvBlock {
    Conv2d<T> conv;
    GroupNorm<T> norm;

    struct Cache {
        BasicTensor<T> input;
        typename GroupNorm<T>::Cache norm;
        BasicTensor<T> pre_activation;
    };

    static ConvBlock make(ParamBuilder<T>& b, const std::string& name, int in, int out, int kernel,
                          int stride);

    int out_channels() const { return conv.out_channels; }
    BasicTensor<T> forward(const ParameterSet<T>& p, const BasicTensor<T>& x, Cache* cache) const;
    BasicTensor<T> backward(const ParameterSet<T>& p, const Cache& cache, const BasicTensor<T>& dy,
                            ParameterSet<T>& g) const;
};

/// 1x1 reduce then 3x3 conv, with an optional residual add.
template <typename T>
struct Bottleneck {
    ConvBlock<T> cv1;
    ConvBlock<T> cv2;
    bool shortcut = true;

    struct Cache {
        typename ConvBlock<T>::Cache c1;
        typename ConvBlock<T>::Cache c2;
    };

    static Bottleneck make(ParamBuilder<T>& b, const std::string& name, int channels, bool shortcut);

    BasicTensor<T> forward(const ParameterSet<T>& p, const BasicTensor<T>& x, Cache* cache) const;
    BasicTensor<T> backward(const ParameterSet<T>& p, const Cache& cache, const BasicTensor<T>& dy,
                            ParameterSet<T>& g) const;
};

/// Cross-stage partial block: two 1x1 branches, a bottleneck stack on one, merged by a 1x1.
template <typename T>
struct CspBlock {
    ConvBlock<T> cv1;
    ConvBlock<T> cv2;
    ConvBlock<T> cv3;
    std::vector<Bottleneck<T>> stack;

    struct Cache {
        typename ConvBlock<T>::Cache c1;
        typename ConvBlock<T>::Cache c2;
        typename ConvBlock<T>::Cache c3;
        std::vector<typename Bottleneck<T>::Cache> stack;
    };

    static CspBlock make(ParamBuilder<T>& b, const std::string& name, int in, int out, int repeats,
                         bool shortcut);

    int out_channels() const { return cv3.out_channels(); }
    BasicTensor<T> forward(const ParameterSet<T>& p, const BasicTensor<T>& x, Cache* cache) const;
    BasicTensor<T> backward(const ParameterSet<T>& p, const Cache& cache, const BasicTensor<T>& dy,
                            ParameterSet<T>& g) const;
};

/// Three chained 5x5 stride-1 max-pools whose outputs are concatenated with their input.
template <typename T>
struct PoolPyramid {
    ConvBlock<T> cv1;
    ConvBlock<T> cv2;

    struct Cache {
        typename ConvBlock<T>::Cache c1;
        typename ConvBlock<T>::Cache c2;
        std::vector<std::uint32_t> argmax[3];
    };

    static PoolPyramid make(ParamBuilder<T>& b, const std::string& name, int channels);

    BasicTensor<T> forward(const ParameterSet<T>& p, const BasicTensor<T>& x, Cache* cache) const;
    BasicTensor<T> backward(const ParameterSet<T>& p, const Cache& cache, const BasicTensor<T>& dy,
                            ParameterSet<T>& g) const;
};

// Stateless helpers.
template <typename T>
BasicTensor<T> max_pool5(const BasicTensor<T>& x, std::vector<std::uint32_t>* argmax);
template <typename T>
BasicTensor<T> max_pool5_backward(const Shape& in_shape, const std::vector<std::uint32_t>& argmax,
                                  const BasicTensor<T>& dy);
template <typename T>
BasicTensor<T> upsample2x(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> upsample2x_backward(const BasicTensor<T>& dy);
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);
/// Splits along channels at `first` into (head, tail).
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& x, int first);
template <typename T>
void add_inplace(BasicTensor<T>& dst, const BasicTensor<T>& src);

} // namespace yunet::detail
