#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "yunet/data.hpp"
#include "yunet/error.hpp"
#include "yunet/metrics.hpp"
#include "yunet/model.hpp"

namespace yunet {

struct LossWeights {
    double bce = 1.0;
    double dice = 1.0;
};

/// Defaults are the published recipe: SGD, lr 0.01, momentum 0.937, weight decay 5e-4,
/// 50 epochs, batch size 4.
struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.937;
    double weight_decay = 0.0005;
    int epochs = 50;
    int batch_size = 4;
    std::uint64_t seed = 0;
    LossWeights loss_weights;
    double binarize_threshold = 0.5;

    void validate() const;
};

template <typename T>
struct LossResult {
    double total = 0.0;
    double bce = 0.0;
    double dice_loss = 0.0;  // 1 - soft Dice
    BasicTensor<T> grad;     // d(total)/d(logits)
};

/// bce_weight * mean BCE-with-logits + dice_weight * (1 - soft Dice), over the whole batch.
template <typename T>
LossResult<T> composite_loss(const BasicTensor<T>& logits, const BasicTensor<T>& target, LossWeights weights);

/// Momentum buffers, keyed like the network parameters.
template <typename T>
using MomentumState = ParameterSet<T>;

/// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v.
/// An empty state is initialized to zeros.
template <typename T>
void sgd_step(BasicNetwork<T>& net, const ParameterSet<T>& grads, MomentumState<T>& state,
              const TrainConfig& cfg);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_bce = 0.0;
    double train_dice_loss = 0.0;
    std::optional<SegmentationMetrics> validation;
};

using TrainHistory = std::vector<EpochRecord>;

std::string history_to_csv(const TrainHistory& history);
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

struct Checkpoint {
    NetworkSpec spec;
    ParameterSet<float> parameters;
    MomentumState<float> optimizer_state;
    int epoch = 0;
    TrainHistory history;

    static Checkpoint capture(const Network& net, const MomentumState<float>& state, int epoch,
                              const TrainHistory& history);
    /// Rebuilds the network described by `spec` and loads the parameters into it.
    Network restore_network() const;
};

/// Container: magic, version, spec JSON, named float32 LE arrays for parameters and
/// optimizer state, history JSON, FNV-1a checksum, end marker.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Raised when the loss goes non-finite; carries the last checkpoint taken at an epoch boundary.
class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& message, Checkpoint last_good)
        : NumericError(message), last_good_(std::move(last_good)) {}
    const Checkpoint& last_good() const { return last_good_; }

private:
    Checkpoint last_good_;
};

struct FitOptions {
    const Dataset* validation = nullptr;
    std::function<void(const Checkpoint&)> on_epoch_end;
    std::function<void(int step, double loss)> on_step;
};

struct FitResult {
    Checkpoint final_checkpoint;
    std::optional<Checkpoint> best_checkpoint;  // by validation IoU, when validation data is given
    TrainHistory history;
    std::size_t steps = 0;
};

/// Runs epochs * ceil(N / batch_size) SGD steps in a seed-determined order.
FitResult fit(Network& net, const Dataset& train, const TrainConfig& cfg, const FitOptions& options = {});

/// sigmoid(logit) >= threshold, for a (1,1,H,W) or (1,H,W) logit tensor.
BinaryMask mask_from_logits(const Tensor& logits, double threshold);

/// Binary mask for one preprocessed (3,H,W) image; letterbox padding cropped when a record is given.
BinaryMask predict_mask(const Network& net, const Tensor& image, double threshold,
                        const LetterboxRecord* letterbox = nullptr);

/// Stacks (C,H,W) tensors into (B,C,H,W).
Tensor stack_batch(const std::vector<const Tensor*>& items);

} // namespace yunet
