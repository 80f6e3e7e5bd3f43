// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

using namespace yunet;
using namespace yunet::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

Outcome shape_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> u(-1.f, 1.f);
    std::ostringstream bad;
    for (Variant v : kAllVariants) {
        const Network net = build_variant(v);
        for (const Shape& s : {Shape{1, 3, 64, 64}, Shape{2, 3, 96, 160}}) {
            Tensor x(s);
            for (auto& e : x.values()) e = u(rng);
            const Tensor y = net.forward(x);
            const Shape want{s[0], 1, s[2], s[3]};
            if (y.shape() != want) bad << to_string(v) << ":" << shape_string(y.shape()) << " ";
        }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = bad.str().empty() && secs < 60.0;
    o.detail = "10 forwards in " + fmt("%.1f", secs) + " s" + (bad.str().empty() ? "" : ", wrong shapes " + bad.str());
    return o;
}

Outcome capacity_ordering() {
    std::ostringstream d;
    std::size_t prev = 0;
    bool ok = true;
    for (Variant v : kAllVariants) {
        const std::size_t n = param_count(build_variant(v));
        d << to_string(v) << "=" << n << " ";
        ok = ok && n > prev;
        prev = n;
    }
    return {ok, d.str()};
}

Outcome gradient() {
    const auto r = gradient_check(200, 3);
    Outcome o;
    o.pass = r.param_count <= 10000 && r.checked >= 100 && r.max_rel_error <= 1e-3;
    o.detail = std::to_string(r.checked) + " of " + std::to_string(r.param_count) + " params, max rel err " +
               fmt("%.3g", r.max_rel_error) + " at " + r.worst;
    return o;
}

Outcome metric_oracle() {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> density(0.0, 1.0);
    int mismatches = 0;
    double worst_identity = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const BinaryMask p = random_mask(rng, 16, 16, density(rng));
        const BinaryMask g = random_mask(rng, 16, 16, density(rng));
        const auto c = confusion_counts(p, g);
        const auto b = brute_counts(p, g);
        const auto m = segmentation_metrics(c);
        const double n = 256.0;
        bool same = c.tp == b.tp && c.fp == b.fp && c.tn == b.tn && c.fn == b.fn;
        same = same && m.accuracy == (b.tp + b.tn) / n && m.mcr == 1.0 - (b.tp + b.tn) / n;
        auto ratio_ok = [](const std::optional<double>& got, double num, double den) {
            return den == 0 ? !got.has_value() : (got.has_value() && *got == num / den);
        };
        same = same && ratio_ok(m.precision, b.tp, b.tp + b.fp) && ratio_ok(m.recall, b.tp, b.tp + b.fn) &&
               ratio_ok(m.iou, b.tp, b.tp + b.fp + b.fn) && ratio_ok(m.dice, 2.0 * b.tp, 2.0 * b.tp + b.fp + b.fn);
        mismatches += !same;
        if (m.iou && m.dice) worst_identity = std::max(worst_identity, std::abs(*m.dice - 2 * *m.iou / (1 + *m.iou)));
    }
    return {mismatches == 0 && worst_identity <= 1e-12,
            std::to_string(mismatches) + " mismatches in 1000 pairs, max |dice - 2iou/(1+iou)| " +
                fmt("%.3g", worst_identity)};
}

Outcome pad_oracle() {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> width(1, 64);
    std::uniform_int_distribution<int> height(1, 64);
    std::uniform_real_distribution<double> p_undef(0.0, 0.5);
    int checked = 0;
    int no_overlap = 0;
    double worst = 0.0;
    bool identities = true;
    for (int i = 0; i < 1000; ++i) {
        const int w = width(rng);
        const int h = height(rng);
        const SkylineVector a = random_skyline(rng, w, h, p_undef(rng));
        const SkylineVector b = random_skyline(rng, w, h, p_undef(rng));
        const double want = brute_pad(a.rows, b.rows);
        if (std::isnan(want)) {
            try {
                (void)pad(a, b);
                identities = false;
            } catch (const NoOverlapError&) {
                ++no_overlap;
            }
            continue;
        }
        const double got = pad(a, b).e;
        worst = std::max(worst, std::abs(got - want));
        identities = identities && pad(b, a).e == got;
        if (!std::isnan(brute_pad(a.rows, a.rows))) identities = identities && pad(a, a).e == 0.0;
        ++checked;
    }
    return {worst <= 1e-9 && identities && checked > 900,
            std::to_string(checked) + " pairs compared (" + std::to_string(no_overlap) +
                " without overlap), max abs diff " + fmt("%.3g", worst) +
                (identities ? ", identity and symmetry exact" : ", identity/symmetry violated")};
}

Outcome skyline_oracle() {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> dim(1, 64);
    std::uniform_real_distribution<double> density(0.0, 1.0);
    std::bernoulli_distribution horizon_like(0.5);
    int scan_mismatch = 0;
    int flip_mismatch = 0;
    for (int i = 0; i < 1000; ++i) {
        const int h = dim(rng);
        const int w = dim(rng);
        const BinaryMask m = horizon_like(rng) ? random_horizon_mask(rng, h, w) : random_mask(rng, h, w, density(rng));
        const SkylineVector s = skyline_from_mask(m);
        scan_mismatch += s.rows != brute_skyline(m) || s.width != w || s.height != h;
        flip_mismatch += skyline_from_mask(m.flipped_lr()) != s.reversed();
    }
    return {scan_mismatch == 0 && flip_mismatch == 0,
            "1000 masks: " + std::to_string(scan_mismatch) + " scan mismatches, " + std::to_string(flip_mismatch) +
                " flip mismatches"};
}

BenchmarkResult g_overfit;

Outcome overfit() {
    g_overfit = overfit_run(100, 0);
    Outcome o;
    o.pass = g_overfit.fit.steps == 200 && g_overfit.train_iou >= 0.95 && g_overfit.seconds <= 600.0;
    o.detail = std::to_string(g_overfit.fit.steps) + " steps, train IoU " + fmt("%.4f", g_overfit.train_iou) +
               ", " + fmt("%.1f", g_overfit.seconds) + " s";
    return o;
}

Outcome end_to_end() {
    const auto r = end_to_end_run(50);
    const double iou = r.seg.metrics.iou.value_or(0.0);
    const double mu = r.sky.aggregate ? r.sky.aggregate->mu : 1e9;
    Outcome o;
    o.pass = mu <= 2.0 && iou >= 0.90 && r.seconds <= 1800.0;
    o.detail = "held-out IoU " + fmt("%.4f", iou) + ", PAD mu " + fmt("%.3f", mu) + " px (" +
               std::to_string(r.sky.rows.size()) + " images, " + std::to_string(r.sky.excluded.size()) +
               " excluded), " + fmt("%.1f", r.seconds) + " s";
    return o;
}

Outcome reproducibility() {
    const BenchmarkResult second = overfit_run(100, 0);
    const std::string a = history_to_csv(g_overfit.fit.history);
    const std::string b = history_to_csv(second.fit.history);
    return {!a.empty() && a == b, std::to_string(second.fit.history.size()) + " epochs, history CSVs " +
                                      (a == b ? "identical" : "differ")};
}

Outcome checkpoint_round_trip() {
    const Network net = build_variant(Variant::n, 3, 1, 5);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<float> u(-1.f, 1.f);
    Tensor x({2, 3, 64, 96});
    for (auto& e : x.values()) e = u(rng);
    const Tensor before = net.forward(x);
    const auto dir = scratch_dir("acceptance_ckpt");
    const auto path = dir / "net.ckpt";
    save_checkpoint(Checkpoint::capture(net, {}, 0, {}), path);
    const Network loaded = load_checkpoint(path).restore_network();
    const Tensor after = loaded.forward(x);
    std::size_t diff = 0;
    for (std::size_t i = 0; i < before.size(); ++i) {
        diff += std::memcmp(&before[i], &after[i], sizeof(float)) != 0;
    }
    std::filesystem::remove_all(dir);
    return {before.shape() == after.shape() && diff == 0,
            std::to_string(before.size()) + " logits, " + std::to_string(diff) + " bitwise differences"};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"shape_suite", shape_suite},
        {"capacity_ordering", capacity_ordering},
        {"gradient_check", gradient},
        {"metric_oracle", metric_oracle},
        {"pad_oracle", pad_oracle},
        {"skyline_oracle", skyline_oracle},
        {"overfit_benchmark", overfit},
        {"end_to_end_benchmark", end_to_end},
        {"reproducibility", reproducibility},
        {"checkpoint_round_trip", checkpoint_round_trip},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
