#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "morpinet/dnet.hpp"
#include "morpinet/errors.hpp"

using namespace morpinet;

namespace {

Window random_window(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Window w;
    for (auto& v : w.x) v = g(rng);
    return w;
}

DnetWeights random_weights(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return DnetWeights::init(DnetConfig{}, rng);
}

// Naive direct evaluation of the convolution sum.
double conv_oracle(const Window& x, const Eigen::MatrixXd& k, const Eigen::VectorXd& b,
                   int r, int j) {
    double acc = b(r);
    for (int c = 0; c < kImuChannels; ++c) {
        for (int a = 0; a < 2; ++a) {
            acc += k(r, c * 2 + a) * x.at(c, j + a);
        }
    }
    return std::max(acc, 0.0);
}

}  // namespace

TEST_CASE("parameter count is exactly 174300") {
    DnetConfig cfg;
    CHECK(cfg.parameter_count() == 174'300);
    CHECK(cfg.conv_flat() == 161);
    CHECK(cfg.raw_flat() == 144);
    CHECK(cfg.concat_dim() == 305);
}

TEST_CASE("conv1d: zero kernels pass the bias through the ReLU") {
    DnetConfig cfg;
    Window x;
    std::mt19937_64 rng(1);
    x = random_window(rng);
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(7, 12);
    Eigen::VectorXd b(7);
    b << 1.5, -2.0, 0.0, 3.0, -0.5, 0.25, 7.0;
    const Eigen::MatrixXd out = conv1d_apply(x, k, b);
    REQUIRE(out.rows() == 7);
    REQUIRE(out.cols() == 23);
    for (int r = 0; r < 7; ++r) {
        for (int j = 0; j < 23; ++j) {
            CHECK(out(r, j) == doctest::Approx(std::max(b(r), 0.0)));
        }
    }
}

TEST_CASE("conv1d: time-difference kernel takes a discrete derivative") {
    Window x;
    for (int t = 0; t < kWindowLen; ++t) x.at(0, t) = 0.1 * t * t;  // increasing
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(7, 12);
    k(0, 0) = -1.0;  // tap at t
    k(0, 1) = 1.0;   // tap at t+1
    const Eigen::VectorXd b = Eigen::VectorXd::Zero(7);
    const Eigen::MatrixXd out = conv1d_apply(x, k, b);
    for (int j = 0; j < 23; ++j) {
        CHECK(out(0, j) == doctest::Approx(x.at(0, j + 1) - x.at(0, j)));
    }
}

TEST_CASE("conv1d matches the naive double loop") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    const Window x = random_window(rng);
    Eigen::MatrixXd k(7, 12);
    Eigen::VectorXd b(7);
    for (int r = 0; r < 7; ++r) {
        b(r) = g(rng);
        for (int c = 0; c < 12; ++c) k(r, c) = g(rng);
    }
    const Eigen::MatrixXd out = conv1d_apply(x, k, b);
    for (int r = 0; r < 7; ++r) {
        for (int j = 0; j < 23; ++j) {
            CHECK(out(r, j) == doctest::Approx(conv_oracle(x, k, b, r, j)).epsilon(1e-12));
        }
    }
}

TEST_CASE("dense_apply") {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd a(4);
    a << 1, 2, 3, 4;
    CHECK((dense_apply(a, eye, Eigen::VectorXd::Zero(4)) - a).norm() == 0.0);

    Eigen::VectorXd b(4);
    b << -1, 0, 1, 2;
    CHECK((dense_apply(a, Eigen::MatrixXd::Zero(4, 4), b) - b).norm() == 0.0);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd w(5, 4);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 4; ++j) w(i, j) = g(rng);
    }
    Eigen::VectorXd bias(5);
    for (int i = 0; i < 5; ++i) bias(i) = g(rng);
    const Eigen::VectorXd z = dense_apply(a, w, bias);
    for (int i = 0; i < 5; ++i) {
        double acc = bias(i);
        for (int j = 0; j < 4; ++j) acc += w(i, j) * a(j);
        CHECK(z(i) == doctest::Approx(acc).epsilon(1e-12));
    }
    CHECK_THROWS_AS(dense_apply(a, w, Eigen::VectorXd::Zero(3)), NumericError);
}

TEST_CASE("relu_apply") {
    Eigen::VectorXd z(3);
    z << -1.0, 0.0, 2.5;
    const Eigen::VectorXd a = relu_apply(z);
    CHECK(a(0) == 0.0);
    CHECK(a(1) == 0.0);
    CHECK(a(2) == 2.5);
}

TEST_CASE("layer norm: constant vector maps to the bias") {
    const Eigen::VectorXd z = Eigen::VectorXd::Constant(8, 3.7);
    const Eigen::VectorXd out =
        layer_norm_apply(z, Eigen::VectorXd::Ones(8), Eigen::VectorXd::Zero(8));
    CHECK(out.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("layer norm output is standardized before the affine map") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(2.0, 3.0);
    Eigen::VectorXd z(64);
    for (int i = 0; i < 64; ++i) z(i) = g(rng);
    const Eigen::VectorXd out =
        layer_norm_apply(z, Eigen::VectorXd::Ones(64), Eigen::VectorXd::Zero(64));
    CHECK(std::abs(out.mean()) < 1e-9);
    const double var = (out.array() - out.mean()).square().sum() / 64.0;
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps shifts it slightly

    // Two-pass reference.
    const double mean = z.mean();
    double acc = 0.0;
    for (int i = 0; i < 64; ++i) acc += (z(i) - mean) * (z(i) - mean);
    const double ref_inv = 1.0 / std::sqrt(acc / 64.0 + 1e-5);
    for (int i = 0; i < 64; ++i) {
        CHECK(out(i) == doctest::Approx((z(i) - mean) * ref_inv).epsilon(1e-12));
    }
}

TEST_CASE("dropout") {
    std::mt19937_64 rng(7);
    Eigen::VectorXd a = Eigen::VectorXd::Constant(10, 2.0);
    CHECK((dropout_apply(a, 0.0, rng, DnetMode::Train) - a).norm() == 0.0);
    CHECK((dropout_apply(a, 0.9, rng, DnetMode::Infer) - a).norm() == 0.0);

    const int n = 1'000'000;
    Eigen::VectorXd big = Eigen::VectorXd::Constant(n, 1.0);
    const Eigen::VectorXd out = dropout_apply(big, 0.5, rng, DnetMode::Train);
    int survivors = 0;
    for (int i = 0; i < n; ++i) {
        if (out(i) != 0.0) {
            ++survivors;
            CHECK(out(i) == doctest::Approx(2.0));
        }
    }
    const double frac = static_cast<double>(survivors) / n;
    CHECK(std::abs(frac - 0.5) < 0.002);
    CHECK(std::abs(out.mean() - 1.0) < 0.01);
}

TEST_CASE("forward: all-zero weights output the head bias") {
    DnetConfig cfg;
    DnetWeights w = DnetWeights::zeros(cfg);
    w.head_b(0) = 0.42;
    std::mt19937_64 rng(11);
    const Window x = random_window(rng);
    CHECK(dnet_infer(x, w) == doctest::Approx(0.42));
}

TEST_CASE("inference is deterministic") {
    const DnetWeights w = random_weights(13);
    std::mt19937_64 rng(17);
    const Window x = random_window(rng);
    CHECK(dnet_infer(x, w) == dnet_infer(x, w));
}

TEST_CASE("mae loss") {
    Eigen::VectorXd a(1), b(1);
    a << 0.0;
    b << 2.0;
    CHECK(mae_loss(a, a) == 0.0);
    CHECK(mae_loss(a, b) == doctest::Approx(2.0));

    std::mt19937_64 rng(19);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd yh(33), y(33);
    for (int i = 0; i < 33; ++i) {
        yh(i) = g(rng);
        y(i) = g(rng);
    }
    double acc = 0.0;
    for (int i = 0; i < 33; ++i) acc += std::abs(y(i) - yh(i));
    CHECK(mae_loss(yh, y) == doctest::Approx(acc / 33.0).epsilon(1e-12));
    CHECK_THROWS_AS(mae_loss(yh, Eigen::VectorXd::Zero(3)), NumericError);
}

TEST_CASE("backward: zero residual means zero gradients") {
    const DnetWeights w = random_weights(23);
    std::mt19937_64 rng(29);
    const Window x = random_window(rng);
    DnetCache cache;
    const std::vector<const Window*> batch{&x};
    dnet_forward_batch(batch, w, DnetMode::Train, rng, cache);
    const DnetGrads g = dnet_backward(w, cache, Eigen::VectorXd::Zero(1));
    g.for_each_tensor([](const auto& t) {
        CHECK(t.cwiseAbs().maxCoeff() == 0.0);
    });
}

TEST_CASE("head bias gradient is the mean residual sign") {
    const DnetWeights w = random_weights(31);
    std::mt19937_64 rng(37);
    std::vector<Window> xs;
    for (int i = 0; i < 8; ++i) xs.push_back(random_window(rng));
    std::vector<const Window*> batch;
    for (auto& x : xs) batch.push_back(&x);
    DnetCache cache;
    const Eigen::VectorXd y = dnet_forward_batch(batch, w, DnetMode::Train, rng, cache);
    Eigen::VectorXd targets(8);
    targets << 1, -1, 1, 1, -1, 1, -1, 1;  // arbitrary
    const Eigen::VectorXd dy = mae_loss_grad(y, targets);
    const DnetGrads g = dnet_backward(w, cache, dy);
    double mean_sign = 0.0;
    for (int i = 0; i < 8; ++i) mean_sign += (y(i) > targets(i) ? 1.0 : -1.0) / 8.0;
    CHECK(g.head_b(0) == doctest::Approx(mean_sign).epsilon(1e-12));
}

namespace {

// Frozen-mask finite-difference check of dL/dtheta for sampled components of every
// tensor plus one full-gradient directional probe.
void gradcheck(std::uint64_t seed) {
    DnetConfig cfg;
    std::mt19937_64 rng(seed);
    DnetWeights w = DnetWeights::init(cfg, rng);

    std::vector<Window> xs;
    for (int i = 0; i < 4; ++i) xs.push_back(random_window(rng));
    std::vector<const Window*> batch;
    for (auto& x : xs) batch.push_back(&x);

    DnetCache cache;
    Eigen::VectorXd y0 = dnet_forward_batch(batch, w, DnetMode::Train, rng, cache);
    // Targets far from the predictions keep every residual sign stable under h.
    Eigen::VectorXd targets = y0.array() + 5.0;

    const Eigen::VectorXd dy = mae_loss_grad(y0, targets);
    const DnetGrads g = dnet_backward(w, cache, dy);

    const double h = 1e-6;
    auto loss_at = [&]() {
        DnetCache replay = cache;
        const Eigen::VectorXd y = dnet_forward_with_masks(batch, w, replay);
        return mae_loss(y, targets);
    };

    std::mt19937_64 pick(seed ^ 0x9e3779b97f4a7c15ull);
    int tensor_idx = 0;
    double dot_analytic = 0.0, dot_fd = 0.0;
    std::vector<Eigen::MatrixXd*> wt;
    std::vector<const Eigen::MatrixXd*> gt;

    auto check_tensor = [&](auto& wten, const auto& gten) {
        const Eigen::Index n = wten.size();
        const int samples = static_cast<int>(std::min<Eigen::Index>(n, 20));
        for (int s = 0; s < samples; ++s) {
            const Eigen::Index i = static_cast<Eigen::Index>(pick() % n);
            double* p = wten.data() + i;
            const double saved = *p;
            *p = saved + h;
            const double up = loss_at();
            *p = saved - h;
            const double dn = loss_at();
            *p = saved;
            const double fd = (up - dn) / (2 * h);
            const double an = *(gten.data() + i);
            const double rel = std::abs(an - fd) / std::max({std::abs(fd), std::abs(an), 1e-6});
            CHECK(rel <= 1e-4);
        }
        ++tensor_idx;
    };

    check_tensor(w.conv_k, g.conv_k);
    check_tensor(w.conv_b, g.conv_b);
    check_tensor(w.fc1_w, g.fc1_w);
    check_tensor(w.fc1_b, g.fc1_b);
    check_tensor(w.ln1_g, g.ln1_g);
    check_tensor(w.ln1_b, g.ln1_b);
    check_tensor(w.fc2_w, g.fc2_w);
    check_tensor(w.fc2_b, g.fc2_b);
    check_tensor(w.ln2_g, g.ln2_g);
    check_tensor(w.ln2_b, g.ln2_b);
    check_tensor(w.head_w, g.head_w);
    check_tensor(w.head_b, g.head_b);
    CHECK(tensor_idx == 12);

    // Directional probe across all parameters at once.
    std::mt19937_64 dir_rng(seed + 1);
    std::normal_distribution<double> gss(0.0, 1.0);
    DnetWeights direction = DnetWeights::zeros(cfg);
    direction.for_each_tensor([&](auto& t) {
        for (Eigen::Index i = 0; i < t.size(); ++i) *(t.data() + i) = gss(dir_rng);
    });
    double dir_dot = 0.0;
    {
        const DnetWeights& gg = g;
        auto accum = [&](const auto& dten, const auto& gten) {
            for (Eigen::Index i = 0; i < dten.size(); ++i) {
                dir_dot += *(dten.data() + i) * *(gten.data() + i);
            }
        };
        accum(direction.conv_k, gg.conv_k);
        accum(direction.conv_b, gg.conv_b);
        accum(direction.fc1_w, gg.fc1_w);
        accum(direction.fc1_b, gg.fc1_b);
        accum(direction.ln1_g, gg.ln1_g);
        accum(direction.ln1_b, gg.ln1_b);
        accum(direction.fc2_w, gg.fc2_w);
        accum(direction.fc2_b, gg.fc2_b);
        accum(direction.ln2_g, gg.ln2_g);
        accum(direction.ln2_b, gg.ln2_b);
        accum(direction.head_w, gg.head_w);
        accum(direction.head_b, gg.head_b);
    }
    auto axpy = [&](double alpha) {
        auto add = [&](auto& wten, const auto& dten) {
            for (Eigen::Index i = 0; i < wten.size(); ++i) {
                *(wten.data() + i) += alpha * *(dten.data() + i);
            }
        };
        add(w.conv_k, direction.conv_k);
        add(w.conv_b, direction.conv_b);
        add(w.fc1_w, direction.fc1_w);
        add(w.fc1_b, direction.fc1_b);
        add(w.ln1_g, direction.ln1_g);
        add(w.ln1_b, direction.ln1_b);
        add(w.fc2_w, direction.fc2_w);
        add(w.fc2_b, direction.fc2_b);
        add(w.ln2_g, direction.ln2_g);
        add(w.ln2_b, direction.ln2_b);
        add(w.head_w, direction.head_w);
        add(w.head_b, direction.head_b);
    };
    const double hd = 1e-7;
    axpy(hd);
    const double up = loss_at();
    axpy(-2 * hd);
    const double dn = loss_at();
    axpy(hd);
    const double fd_dir = (up - dn) / (2 * hd);
    CHECK(std::abs(fd_dir - dir_dot) / std::max(std::abs(fd_dir), 1e-9) <= 1e-4);
    (void)dot_analytic;
    (void)dot_fd;
    (void)wt;
    (void)gt;
}

}  // namespace

TEST_CASE("backward matches finite differences for five seeds") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) gradcheck(seed);
}

TEST_CASE("adam: zero gradient keeps the weights, advances the step") {
    DnetConfig cfg;
    DnetWeights w = random_weights(41);
    const DnetWeights before = w;
    AdamState st = AdamState::zeros(cfg);
    adam_step(w, DnetWeights::zeros(cfg), st, 0.01, cfg);
    CHECK(st.step == 1);
    CHECK((w.fc1_w - before.fc1_w).cwiseAbs().maxCoeff() == 0.0);
    CHECK((w.head_b - before.head_b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam first step matches the hand computation") {
    DnetConfig cfg;
    DnetWeights w = DnetWeights::zeros(cfg);
    DnetGrads g = DnetWeights::zeros(cfg);
    g.head_b(0) = 0.3;
    AdamState st = AdamState::zeros(cfg);
    const double lr = 0.01;
    adam_step(w, g, st, lr, cfg);
    // m_hat = g, v_hat = g^2 after bias correction; step = -lr*g/(|g|+eps).
    const double expect = -lr * 0.3 / (std::sqrt(0.3 * 0.3) + cfg.adam_eps);
    CHECK(w.head_b(0) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("adam converges on a quadratic bowl") {
    // Minimize 0.5*|w - target|^2 over the head weights only.
    DnetConfig cfg;
    DnetWeights w = DnetWeights::zeros(cfg);
    AdamState st = AdamState::zeros(cfg);
    Eigen::MatrixXd target(1, cfg.fc2);
    for (int i = 0; i < cfg.fc2; ++i) target(0, i) = 0.1 * (i % 5) - 0.2;
    for (int step = 0; step < 500; ++step) {
        DnetGrads g = DnetWeights::zeros(cfg);
        g.head_w = w.head_w - target;
        adam_step(w, g, st, 0.05, cfg);
    }
    CHECK((w.head_w - target).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("plateau scheduler") {
    DnetConfig cfg;
    cfg.lr0 = 0.0025;
    cfg.plateau_patience = 10;

    std::vector<double> improving;
    for (int i = 0; i < 50; ++i) improving.push_back(1.0 / (i + 1));
    CHECK(plateau_scheduler(improving, cfg) == doctest::Approx(0.0025));

    std::vector<double> flat(cfg.plateau_patience + 1, 0.5);
    CHECK(plateau_scheduler(flat, cfg) == doctest::Approx(0.00125));

    std::vector<double> long_flat(500, 0.5);
    CHECK(plateau_scheduler(long_flat, cfg) == doctest::Approx(cfg.lr_min));
}

TEST_CASE("weights round-trip through the container format") {
    const DnetWeights w = random_weights(43);
    const std::string path = "/tmp/morpinet_test_weights.bin";
    save_weights(path, w, 43, "fnv1a:0000000000000000");
    const DnetWeights back = load_weights(path);
    CHECK((back.fc1_w - w.fc1_w).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.conv_k - w.conv_k).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.ln2_g - w.ln2_g).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.head_b - w.head_b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.cfg.parameter_count() == w.cfg.parameter_count());

    std::mt19937_64 rng(47);
    const Window x = random_window(rng);
    CHECK(dnet_infer(x, back) == dnet_infer(x, w));
}
