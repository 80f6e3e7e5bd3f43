#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "support.hpp"
#include "yunet/error.hpp"

using namespace yunet;

namespace {

Tensor random_input(Shape s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-1.f, 1.f);
    Tensor x(std::move(s));
    for (auto& e : x.values()) e = u(rng);
    return x;
}

// Channel and depth scaling written out independently of the library.
int scaled_channels(int base, double width, int cap) {
    return std::min(static_cast<int>(std::ceil(std::min(base, cap) * width / 8.0)) * 8, cap);
}

} // namespace

TEST_CASE("variant names parse and reject unknown tiers") {
    CHECK(parse_variant("x") == Variant::x);
    CHECK(to_string(Variant::m) == "m");
    try {
        parse_variant("q");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("{n,s,m,l,x}") != std::string::npos);
    }
}

TEST_CASE("variant specs follow the depth and width multipliers") {
    const int base_channels[5] = {64, 128, 256, 512, 1024};
    const int base_repeats[5] = {0, 3, 6, 6, 3};
    struct Row {
        Variant v;
        double depth, width;
        int cap;
    };
    for (const Row& r : {Row{Variant::n, 0.5, 0.25, 1024}, Row{Variant::s, 0.5, 0.5, 1024},
                         Row{Variant::m, 0.5, 1.0, 512}, Row{Variant::l, 1.0, 1.0, 512},
                         Row{Variant::x, 1.0, 1.5, 512}}) {
        const NetworkSpec s = NetworkSpec::for_variant(r.v);
        for (int i = 0; i < 5; ++i) {
            CHECK(s.stage_channels[i] == scaled_channels(base_channels[i], r.width, r.cap));
            const int want = i == 0 ? 0 : std::max(1, static_cast<int>(std::lround(base_repeats[i] * r.depth)));
            CHECK(s.stage_repeats[i] == want);
        }
        CHECK(s.neck_repeats == std::max(1, static_cast<int>(std::lround(3 * r.depth))));
    }
}

TEST_CASE("spec JSON round-trips") {
    for (Variant v : kAllVariants) {
        const NetworkSpec s = NetworkSpec::for_variant(v);
        CHECK(NetworkSpec::from_json(s.to_json()) == s);
    }
    NetworkSpec bad = NetworkSpec::for_variant(Variant::n);
    bad.skip_wiring = {{4, 16}, {3, 8}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("forward returns full-resolution single-channel logits") {
    const Network net = build_variant(Variant::n);
    CHECK(net.forward(random_input({1, 3, 32, 32}, 1)).shape() == Shape{1, 1, 32, 32});
    CHECK(net.forward(random_input({2, 3, 64, 96}, 2)).shape() == Shape{2, 1, 64, 96});
    const Network two = build_variant(Variant::n, 3, 2);
    CHECK(two.forward(random_input({1, 3, 32, 64}, 3)).shape() == Shape{1, 2, 32, 64});
}

TEST_CASE("forward rejects bad inputs") {
    const Network net = build_variant(Variant::n);
    CHECK_THROWS_AS(net.forward(random_input({1, 3, 48, 64}, 1)), ShapeError);
    CHECK_THROWS_AS(net.forward(random_input({1, 3, 64, 16}, 1)), ShapeError);
    CHECK_THROWS_AS(net.forward(random_input({1, 1, 64, 64}, 1)), ShapeError);
    CHECK_THROWS_AS(net.forward(random_input({3, 64, 64}, 1)), ShapeError);
    Tensor x = random_input({1, 3, 32, 32}, 1);
    x[17] = std::nanf("");
    CHECK_THROWS_AS(net.forward(x), NumericInputError);
}

TEST_CASE("graph has five downsamples, five upsamples and the canonical skips") {
    const Network net = build_variant(Variant::s);
    int down = 0;
    int up = 0;
    std::set<std::pair<int, int>> skips;
    for (const auto& n : net.graph()) {
        down += n.kind == GraphNode::Kind::downsample;
        up += n.kind == GraphNode::Kind::upsample;
        if (n.skip_stage) skips.insert({n.skip_stage, n.stride_out});
        if (n.kind == GraphNode::Kind::downsample) CHECK(n.stride_out == 2 * n.stride_in);
        if (n.kind == GraphNode::Kind::upsample) CHECK(n.stride_in == 2 * n.stride_out);
    }
    CHECK(down == 5);
    CHECK(up == 5);
    CHECK(skips == std::set<std::pair<int, int>>{{4, 16}, {3, 8}, {2, 4}, {1, 2}});
}

TEST_CASE("encoder features sit at strides 2..32 with the variant's channels") {
    const Network net = build_variant(Variant::n);
    const auto pyr = net.encoder_features(random_input({1, 3, 64, 128}, 4));
    REQUIRE(pyr.levels.size() == 5);
    int i = 0;
    for (int stride : {2, 4, 8, 16, 32}) {
        const Tensor& t = pyr.levels.at(stride);
        CHECK(t.shape() == Shape{1, net.spec().stage_channels[i], 64 / stride, 128 / stride});
        ++i;
    }
}

TEST_CASE("initialization is a pure function of the seed") {
    CHECK(build_variant(Variant::n, 3, 1, 9).parameters() == build_variant(Variant::n, 3, 1, 9).parameters());
    CHECK_FALSE(build_variant(Variant::n, 3, 1, 9).parameters() == build_variant(Variant::n, 3, 1, 10).parameters());
    const Network net = build_variant(Variant::n, 3, 1, 2);
    const Tensor x = random_input({1, 3, 64, 64}, 5);
    CHECK(net.forward(x) == net.forward(x));
}

TEST_CASE("batch items are processed independently") {
    const Network net = build_variant(Variant::n, 3, 1, 4);
    const Tensor a = random_input({3, 32, 64}, 6);
    const Tensor b = random_input({3, 32, 64}, 7);
    const Tensor ab = stack_batch({&a, &b});
    const Tensor y = net.forward(ab);
    const Tensor ya = net.forward(stack_batch({&a}));
    const Tensor yb = net.forward(stack_batch({&b}));
    for (std::size_t i = 0; i < ya.size(); ++i) {
        CHECK(y[i] == doctest::Approx(ya[i]).epsilon(1e-5));
        CHECK(y[ya.size() + i] == doctest::Approx(yb[i]).epsilon(1e-5));
    }
}

TEST_CASE("double copy agrees with the float network") {
    const Network net = build_variant(Variant::n, 3, 1, 8);
    const NetworkD dnet = net.cast<double>();
    const Tensor x = random_input({1, 3, 32, 32}, 8);
    const Tensor y = net.forward(x);
    const TensorD yd = dnet.forward(tensor_cast<double>(x));
    double worst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::abs(y[i] - yd[i]));
    CHECK(worst < 1e-3);
}

TEST_CASE("capacity grows n < s < m < l < x") {
    std::size_t prev = 0;
    for (Variant v : kAllVariants) {
        const std::size_t n = param_count(build_variant(v));
        CHECK(n > prev);
        prev = n;
    }
}

TEST_CASE("analytic gradients match finite differences on a micro network") {
    const auto r = testing::gradient_check(40, 21);
    CHECK(r.param_count <= 10000);
    CHECK(r.checked == 40);
    INFO(r.worst);
    CHECK(r.max_rel_error <= 1e-3);
}

TEST_CASE("input gradient matches finite differences") {
    NetworkD net(testing::micro_spec(), 5);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    TensorD x({1, 3, 32, 32});
    for (auto& e : x.values()) e = normal(rng);
    TensorD w({1, 1, 32, 32});
    for (auto& e : w.values()) e = normal(rng);
    // Linear functional of the logits keeps the oracle free of the loss code.
    auto f = [&](const TensorD& in) {
        const TensorD y = net.forward(in);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
        return s;
    };
    ForwardTrace<double> trace;
    net.forward(x, trace);
    auto grads = net.parameters().zeros_like();
    const TensorD dx = net.backward(trace, w, grads);
    for (std::size_t i : {0u, 100u, 1500u, 3071u}) {
        TensorD xp = x;
        TensorD xm = x;
        xp[i] += 1e-6;
        xm[i] -= 1e-6;
        const double numeric = (f(xp) - f(xm)) / 2e-6;
        CHECK(dx[i] == doctest::Approx(numeric).epsilon(1e-4));
    }
}
