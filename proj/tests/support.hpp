#pragma once

// Oracles and fixtures shared by the unit tests and the acceptance runner.
// The oracles deliberately avoid the library's own helpers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "yunet/data.hpp"
#include "yunet/evaluation.hpp"
#include "yunet/metrics.hpp"
#include "yunet/model.hpp"
#include "yunet/skyline.hpp"
#include "yunet/training.hpp"

namespace yunet::testing {

inline BinaryMask random_mask(std::mt19937_64& rng, int h, int w, double p_sky) {
    std::bernoulli_distribution sky(p_sky);
    BinaryMask m(h, w);
    for (auto& v : m.values) v = sky(rng) ? 1 : 0;
    return m;
}

/// Sky above a random curve, with optional all-sky columns and specks.
inline BinaryMask random_horizon_mask(std::mt19937_64& rng, int h, int w) {
    std::uniform_int_distribution<int> row(0, h);
    std::bernoulli_distribution rare(0.1);
    BinaryMask m(h, w);
    for (int c = 0; c < w; ++c) {
        const int y = rare(rng) ? h : row(rng);
        for (int r = 0; r < h; ++r) m.at(r, c) = r < y ? 1 : 0;
    }
    return m;
}

struct BruteCounts {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline BruteCounts brute_counts(const BinaryMask& pred, const BinaryMask& gt) {
    BruteCounts c;
    for (int r = 0; r < pred.height; ++r) {
        for (int col = 0; col < pred.width; ++col) {
            const int p = pred.at(r, col);
            const int g = gt.at(r, col);
            c.tp += p == 1 && g == 1;
            c.fp += p == 1 && g == 0;
            c.tn += p == 0 && g == 0;
            c.fn += p == 0 && g == 1;
        }
    }
    return c;
}

/// Mean |p_i - p*_i| over columns defined in both vectors; NaN when none are.
inline double brute_pad(const std::vector<int>& p, const std::vector<int>& q) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0 || q[i] < 0) continue;
        sum += std::abs(p[i] - q[i]);
        ++n;
    }
    return n ? sum / n : std::nan("");
}

/// First row whose pixel is non-sky, -1 when the column is all sky.
inline std::vector<int> brute_skyline(const BinaryMask& m) {
    std::vector<int> rows(m.width, -1);
    for (int c = 0; c < m.width; ++c) {
        for (int r = 0; r < m.height; ++r) {
            if (m.at(r, c) == 0) {
                rows[c] = r;
                break;
            }
        }
    }
    return rows;
}

inline SkylineVector random_skyline(std::mt19937_64& rng, int w, int h, double p_undefined) {
    std::uniform_int_distribution<int> row(0, h - 1);
    std::bernoulli_distribution undef(p_undefined);
    SkylineVector s;
    s.width = w;
    s.height = h;
    s.rows.resize(w);
    for (auto& r : s.rows) r = undef(rng) ? SkylineVector::kUndefined : row(rng);
    return s;
}

/// Smallest admissible network: a few thousand parameters.
inline NetworkSpec micro_spec() {
    NetworkSpec s;
    s.variant = Variant::n;
    s.in_channels = 3;
    s.num_classes = 1;
    s.stage_channels = {2, 4, 4, 4, 4};
    s.stage_repeats = {0, 1, 1, 1, 1};
    s.neck_repeats = 1;
    s.head_channels = 2;
    s.skip_wiring = canonical_skip_wiring();
    return s;
}

inline std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct GradCheckResult {
    std::size_t param_count = 0;
    std::size_t checked = 0;
    double max_rel_error = 0.0;
    std::string worst;
};

/// Compares analytic and central-difference gradients of the loss on an 8x8 image.
/// The image sits zero-padded at the center of a 96x96 input and the loss sees only
/// the 8x8 window of the logits. At 32x32 the stride-32 map is a single pixel, the
/// two-channel norm groups collapse to +-1 and their gradients sink below
/// finite-difference roundoff.
inline GradCheckResult gradient_check(std::size_t samples, std::uint64_t seed) {
    constexpr int kSide = 8;
    constexpr int kBox = 96;
    constexpr int kOff = (kBox - kSide) / 2;
    std::mt19937_64 rng(seed);
    NetworkD net(micro_spec(), seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    TensorD x({1, 3, kBox, kBox});
    for (int c = 0; c < 3; ++c) {
        for (int r = 0; r < kSide; ++r) {
            for (int q = 0; q < kSide; ++q) x.at(0, c, kOff + r, kOff + q) = normal(rng);
        }
    }
    TensorD target({1, 1, kSide, kSide});
    std::uniform_int_distribution<int> horizon(1, kSide - 1);
    for (int q = 0; q < kSide; ++q) {
        const int y = horizon(rng);
        for (int r = 0; r < y; ++r) target.at(0, 0, r, q) = 1.0;
    }

    auto crop = [&](const TensorD& logits) {
        TensorD out({1, 1, kSide, kSide});
        for (int r = 0; r < kSide; ++r) {
            for (int q = 0; q < kSide; ++q) out.at(0, 0, r, q) = logits.at(0, 0, kOff + r, kOff + q);
        }
        return out;
    };
    auto loss_of = [&](const NetworkD& n) { return composite_loss(crop(n.forward(x)), target, {}).total; };

    ForwardTrace<double> trace;
    const TensorD logits = net.forward(x, trace);
    const auto loss = composite_loss(crop(logits), target, {});
    TensorD grad_logits(logits.shape());
    for (int r = 0; r < kSide; ++r) {
        for (int q = 0; q < kSide; ++q) grad_logits.at(0, 0, kOff + r, kOff + q) = loss.grad.at(0, 0, r, q);
    }
    ParameterSet<double> grads = net.parameters().zeros_like();
    net.backward(trace, grad_logits, grads);

    GradCheckResult res;
    res.param_count = net.param_count();
    // Flat index -> (tensor, offset).
    std::vector<std::pair<std::size_t, std::size_t>> all;
    for (std::size_t t = 0; t < net.parameters().size(); ++t) {
        for (std::size_t k = 0; k < net.parameters().tensor(t).size(); ++k) all.emplace_back(t, k);
    }
    std::shuffle(all.begin(), all.end(), rng);
    const double h = 1e-6;
    for (std::size_t i = 0; i < std::min(samples, all.size()); ++i) {
        const auto [t, k] = all[i];
        double& p = net.parameters().tensor(t)[k];
        const double saved = p;
        p = saved + h;
        const double up = loss_of(net);
        p = saved - h;
        const double down = loss_of(net);
        p = saved;
        const double numeric = (up - down) / (2 * h);
        const double analytic = grads.tensor(t)[k];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        const double rel = std::abs(numeric - analytic) / denom;
        if (rel > res.max_rel_error) {
            res.max_rel_error = rel;
            res.worst = net.parameters().name(t) + "[" + std::to_string(k) + "] analytic=" +
                        fmt_g(analytic) + " numeric=" + fmt_g(numeric);
        }
        ++res.checked;
    }
    return res;
}

struct BenchmarkResult {
    FitResult fit;
    double train_iou = 0.0;
    double seconds = 0.0;
};

/// Synthetic count=8, 64x64, seed 0; variant n with the published recipe for `epochs` epochs.
inline BenchmarkResult overfit_run(int epochs = 100, std::uint64_t seed = 0) {
    const auto t0 = std::chrono::steady_clock::now();
    SynthConfig sc;
    sc.count = 8;
    sc.seed = seed;
    PreprocessSpec ps;
    const InMemoryDataset data = synthetic_dataset(sc, ps);
    Network net = build_variant(Variant::n, 3, 1, seed);
    TrainConfig tc;
    tc.epochs = epochs;
    tc.seed = seed;
    BenchmarkResult r;
    r.fit = fit(net, data, tc);
    const auto report = evaluate_segmentation(net, data, 0.5);
    r.train_iou = report.metrics.iou.value_or(0.0);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

struct EndToEndResult {
    SegmentationReport seg;
    SkylineReport sky;
    double seconds = 0.0;
};

/// 64 training scenes and 16 held-out scenes drawn with a different seed.
inline EndToEndResult end_to_end_run(int epochs = 50) {
    const auto t0 = std::chrono::steady_clock::now();
    PreprocessSpec ps;
    SynthConfig train_cfg;
    train_cfg.count = 64;
    train_cfg.seed = 0;
    SynthConfig test_cfg = train_cfg;
    test_cfg.count = 16;
    test_cfg.seed = 1;
    const InMemoryDataset train = synthetic_dataset(train_cfg, ps);
    const InMemoryDataset test = synthetic_dataset(test_cfg, ps);
    Network net = build_variant(Variant::n, 3, 1, 0);
    TrainConfig tc;
    tc.epochs = epochs;
    fit(net, train, tc);
    const auto pairs = predict_pairs(net, test, 0.5);
    EndToEndResult r;
    r.seg = evaluate_segmentation(pairs);
    r.sky = evaluate_skyline(pairs, SkylineMethod::sobel);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

/// Fresh scratch directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("yunet_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace yunet::testing
