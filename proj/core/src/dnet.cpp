#include "morpinet/dnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "morpinet/errors.hpp"

namespace morpinet {

using json = nlohmann::json;

namespace {

// 53-bit uniform in [0,1); hand-rolled so results do not depend on the stdlib's
// distribution internals.
double uniform53(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace

void DnetConfig::validate() const {
    if (window < kernel_time) throw NumericError("dnet: window shorter than kernel");
    if (in_channels != kImuChannels || window != kWindowLen) {
        throw NumericError("dnet: input shape must match the 6x24 window layout");
    }
    if (dropout_flat < 0.0 || dropout_flat >= 1.0 || dropout_fc < 0.0 || dropout_fc >= 1.0) {
        throw NumericError("dnet: dropout rates must lie in [0,1)");
    }
    if (!(lr0 > 0.0)) throw NumericError("dnet: lr0 must be > 0");
    if (batch < 1 || epochs < 1) throw NumericError("dnet: batch and epochs must be >= 1");
}

std::size_t DnetConfig::parameter_count() const {
    const std::size_t conv = static_cast<std::size_t>(conv_filters) *
                                 (in_channels * kernel_time) + conv_filters;
    const std::size_t l1 = static_cast<std::size_t>(fc1) * concat_dim() + fc1;
    const std::size_t ln1 = 2 * static_cast<std::size_t>(fc1);
    const std::size_t l2 = static_cast<std::size_t>(fc2) * fc1 + fc2;
    const std::size_t ln2 = 2 * static_cast<std::size_t>(fc2);
    const std::size_t head = static_cast<std::size_t>(fc2) + 1;
    return conv + l1 + ln1 + l2 + ln2 + head;
}

DnetWeights DnetWeights::zeros(const DnetConfig& cfg) {
    cfg.validate();
    DnetWeights w;
    w.cfg = cfg;
    w.conv_k = Eigen::MatrixXd::Zero(cfg.conv_filters, cfg.in_channels * cfg.kernel_time);
    w.conv_b = Eigen::VectorXd::Zero(cfg.conv_filters);
    w.fc1_w = Eigen::MatrixXd::Zero(cfg.fc1, cfg.concat_dim());
    w.fc1_b = Eigen::VectorXd::Zero(cfg.fc1);
    w.ln1_g = Eigen::VectorXd::Zero(cfg.fc1);
    w.ln1_b = Eigen::VectorXd::Zero(cfg.fc1);
    w.fc2_w = Eigen::MatrixXd::Zero(cfg.fc2, cfg.fc1);
    w.fc2_b = Eigen::VectorXd::Zero(cfg.fc2);
    w.ln2_g = Eigen::VectorXd::Zero(cfg.fc2);
    w.ln2_b = Eigen::VectorXd::Zero(cfg.fc2);
    w.head_w = Eigen::MatrixXd::Zero(1, cfg.fc2);
    w.head_b = Eigen::VectorXd::Zero(1);
    w.norm_mean = Eigen::VectorXd::Zero(cfg.in_channels);
    w.norm_std = Eigen::VectorXd::Ones(cfg.in_channels);
    return w;
}

namespace {

void fill_uniform(Eigen::MatrixXd& m, double scale, std::mt19937_64& rng) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            m(i, j) = scale * (2.0 * uniform53(rng) - 1.0);
        }
    }
}

}  // namespace

DnetWeights DnetWeights::init(const DnetConfig& cfg, std::mt19937_64& rng) {
    DnetWeights w = zeros(cfg);
    fill_uniform(w.conv_k, 1.0 / std::sqrt(cfg.in_channels * cfg.kernel_time), rng);
    fill_uniform(w.fc1_w, 1.0 / std::sqrt(static_cast<double>(cfg.concat_dim())), rng);
    fill_uniform(w.fc2_w, 1.0 / std::sqrt(static_cast<double>(cfg.fc1)), rng);
    fill_uniform(w.head_w, 1.0 / std::sqrt(static_cast<double>(cfg.fc2)), rng);
    w.ln1_g.setOnes();
    w.ln2_g.setOnes();
    return w;
}

// --- elementary ops ---

namespace {

// Unrolled window for the convolution: rows (channel, tap), columns time.
Eigen::MatrixXd im2col(const double* x, const DnetConfig& cfg) {
    const int taps = cfg.in_channels * cfg.kernel_time;
    const int out_len = cfg.conv_out_len();
    Eigen::MatrixXd col(taps, out_len);
    for (int c = 0; c < cfg.in_channels; ++c) {
        for (int a = 0; a < cfg.kernel_time; ++a) {
            for (int j = 0; j < out_len; ++j) {
                col(c * cfg.kernel_time + a, j) = x[c * cfg.window + j + a];
            }
        }
    }
    return col;
}

}  // namespace

Eigen::MatrixXd conv1d_apply(const Window& x, const Eigen::MatrixXd& k,
                             const Eigen::VectorXd& b) {
    DnetConfig cfg;
    if (k.rows() != cfg.conv_filters || k.cols() != cfg.in_channels * cfg.kernel_time ||
        b.size() != cfg.conv_filters) {
        throw NumericError("conv1d_apply: kernel/bias shape mismatch");
    }
    const Eigen::MatrixXd col = im2col(x.x.data(), cfg);
    Eigen::MatrixXd z = k * col;
    z.colwise() += b;
    return z.cwiseMax(0.0);
}

Eigen::VectorXd dense_apply(const Eigen::VectorXd& a, const Eigen::MatrixXd& w,
                            const Eigen::VectorXd& b) {
    if (w.cols() != a.size() || w.rows() != b.size()) {
        throw NumericError("dense_apply: shape mismatch");
    }
    return w * a + b;
}

Eigen::VectorXd relu_apply(const Eigen::VectorXd& z) {
    return z.cwiseMax(0.0);
}

Eigen::VectorXd layer_norm_apply(const Eigen::VectorXd& z, const Eigen::VectorXd& gain,
                                 const Eigen::VectorXd& bias, double eps) {
    if (z.size() < 2) throw NumericError("layer_norm_apply: need at least 2 features");
    if (gain.size() != z.size() || bias.size() != z.size()) {
        throw NumericError("layer_norm_apply: shape mismatch");
    }
    const double mean = z.mean();
    const double var = (z.array() - mean).square().sum() / static_cast<double>(z.size());
    const double inv = 1.0 / std::sqrt(var + eps);
    return (((z.array() - mean) * inv) * gain.array() + bias.array()).matrix();
}

Eigen::VectorXd dropout_apply(const Eigen::VectorXd& a, double p, std::mt19937_64& rng,
                              DnetMode mode) {
    if (p < 0.0 || p >= 1.0) throw NumericError("dropout_apply: p must lie in [0,1)");
    if (mode == DnetMode::Infer || p == 0.0) return a;
    const double keep_scale = 1.0 / (1.0 - p);
    Eigen::VectorXd out(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        out(i) = (uniform53(rng) < p) ? 0.0 : a(i) * keep_scale;
    }
    return out;
}

double mae_loss(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& y) {
    if (y_hat.size() != y.size()) throw NumericError("mae_loss: length mismatch");
    if (y.size() == 0) throw NumericError("mae_loss: empty batch");
    return (y_hat - y).cwiseAbs().mean();
}

Eigen::VectorXd mae_loss_grad(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& y) {
    if (y_hat.size() != y.size()) throw NumericError("mae_loss_grad: length mismatch");
    if (y.size() == 0) throw NumericError("mae_loss_grad: empty batch");
    const double inv_n = 1.0 / static_cast<double>(y.size());
    Eigen::VectorXd g(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double r = y_hat(i) - y(i);
        g(i) = (r > 0.0 ? inv_n : (r < 0.0 ? -inv_n : 0.0));
    }
    return g;
}

// --- forward ---

namespace {

void draw_mask(Eigen::MatrixXd& mask, double p, std::mt19937_64& rng) {
    const double keep_scale = 1.0 / (1.0 - p);
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
        for (Eigen::Index i = 0; i < mask.rows(); ++i) {
            mask(i, j) = (uniform53(rng) < p) ? 0.0 : keep_scale;
        }
    }
}

void layer_norm_columns(const Eigen::MatrixXd& x, const Eigen::VectorXd& g,
                        const Eigen::VectorXd& b, double eps, Eigen::MatrixXd& xhat,
                        Eigen::VectorXd& inv_std, Eigen::MatrixXd& out) {
    const auto n = static_cast<double>(x.rows());
    xhat.resize(x.rows(), x.cols());
    out.resize(x.rows(), x.cols());
    inv_std.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double mean = x.col(c).mean();
        const double var = (x.col(c).array() - mean).square().sum() / n;
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std(c) = inv;
        xhat.col(c) = (x.col(c).array() - mean) * inv;
        out.col(c) = (xhat.col(c).array() * g.array() + b.array()).matrix();
    }
}

Eigen::VectorXd forward_core(const std::vector<const Window*>& batch,
                             const DnetWeights& w, DnetCache& cache, bool fresh_masks,
                             DnetMode mode, std::mt19937_64* rng) {
    const DnetConfig& cfg = w.cfg;
    if (batch.empty()) throw NumericError("dnet forward: empty batch");
    const auto bsz = static_cast<Eigen::Index>(batch.size());

    cache.x_raw.resize(cfg.raw_flat(), bsz);
    for (Eigen::Index b = 0; b < bsz; ++b) {
        for (int c = 0; c < cfg.in_channels; ++c) {
            for (int t = 0; t < cfg.window; ++t) {
                const double v = batch[static_cast<std::size_t>(b)]->x[c * cfg.window + t];
                cache.x_raw(c * cfg.window + t, b) = (v - w.norm_mean(c)) / w.norm_std(c);
            }
        }
    }

    // Convolution branch.
    cache.conv_z.resize(cfg.conv_flat(), bsz);
    const int out_len = cfg.conv_out_len();
    for (Eigen::Index b = 0; b < bsz; ++b) {
        const Eigen::MatrixXd col = im2col(cache.x_raw.col(b).data(), cfg);
        Eigen::MatrixXd z = w.conv_k * col;
        z.colwise() += w.conv_b;
        for (int r = 0; r < cfg.conv_filters; ++r) {
            for (int j = 0; j < out_len; ++j) {
                cache.conv_z(r * out_len + j, b) = z(r, j);
            }
        }
    }

    const bool train = mode == DnetMode::Train;
    if (fresh_masks) {
        cache.mask0.resize(cfg.conv_flat(), bsz);
        cache.mask1.resize(cfg.fc1, bsz);
        cache.mask2.resize(cfg.fc2, bsz);
        if (train) {
            draw_mask(cache.mask0, cfg.dropout_flat, *rng);
            draw_mask(cache.mask1, cfg.dropout_fc, *rng);
            draw_mask(cache.mask2, cfg.dropout_fc, *rng);
        } else {
            cache.mask0.setOnes();
            cache.mask1.setOnes();
            cache.mask2.setOnes();
        }
        cache.mode = mode;
    }

    cache.concat.resize(cfg.concat_dim(), bsz);
    cache.concat.topRows(cfg.conv_flat()) =
        cache.conv_z.cwiseMax(0.0).cwiseProduct(cache.mask0);
    cache.concat.bottomRows(cfg.raw_flat()) = cache.x_raw;

    cache.z1 = w.fc1_w * cache.concat;
    cache.z1.colwise() += w.fc1_b;
    cache.d1 = cache.z1.cwiseMax(0.0).cwiseProduct(cache.mask1);
    layer_norm_columns(cache.d1, w.ln1_g, w.ln1_b, cfg.ln_eps, cache.n1hat,
                       cache.inv_std1, cache.n1);

    cache.z2 = w.fc2_w * cache.n1;
    cache.z2.colwise() += w.fc2_b;
    cache.d2 = cache.z2.cwiseMax(0.0).cwiseProduct(cache.mask2);
    layer_norm_columns(cache.d2, w.ln2_g, w.ln2_b, cfg.ln_eps, cache.n2hat,
                       cache.inv_std2, cache.n2);

    cache.y = (w.head_w * cache.n2).transpose() +
              Eigen::VectorXd::Constant(bsz, w.head_b(0));
    cache.valid = true;
    return cache.y;
}

}  // namespace

Eigen::VectorXd dnet_forward_batch(const std::vector<const Window*>& batch,
                                   const DnetWeights& w, DnetMode mode,
                                   std::mt19937_64& rng, DnetCache& cache) {
    return forward_core(batch, w, cache, /*fresh_masks=*/true, mode, &rng);
}

Eigen::VectorXd dnet_forward_with_masks(const std::vector<const Window*>& batch,
                                        const DnetWeights& w, DnetCache& cache) {
    if (cache.mask0.cols() != static_cast<Eigen::Index>(batch.size())) {
        throw NumericError("dnet_forward_with_masks: cache/batch size mismatch");
    }
    return forward_core(batch, w, cache, /*fresh_masks=*/false, cache.mode, nullptr);
}

double dnet_forward(const Window& x, const DnetWeights& w, DnetMode mode,
                    std::mt19937_64& rng, DnetCache& cache) {
    const std::vector<const Window*> batch{&x};
    return dnet_forward_batch(batch, w, mode, rng, cache)(0);
}

double dnet_infer(const Window& x, const DnetWeights& w) {
    std::mt19937_64 rng(0);
    DnetCache cache;
    return dnet_forward(x, w, DnetMode::Infer, rng, cache);
}

// --- backward ---

namespace {

// dL/d(LN input) given dL/d(LN output), for per-column normalization.
void layer_norm_backward(const Eigen::MatrixXd& dout, const Eigen::MatrixXd& xhat,
                         const Eigen::VectorXd& inv_std, const Eigen::VectorXd& gain,
                         Eigen::MatrixXd& dx, Eigen::VectorXd& dgain,
                         Eigen::VectorXd& dbias) {
    const auto n = static_cast<double>(dout.rows());
    dx.resize(dout.rows(), dout.cols());
    dgain = Eigen::VectorXd::Zero(dout.rows());
    dbias = Eigen::VectorXd::Zero(dout.rows());
    for (Eigen::Index c = 0; c < dout.cols(); ++c) {
        dbias += dout.col(c);
        dgain += dout.col(c).cwiseProduct(xhat.col(c));
        const Eigen::VectorXd dxhat = dout.col(c).cwiseProduct(gain);
        const double m1 = dxhat.mean();
        const double m2 = dxhat.cwiseProduct(xhat.col(c)).sum() / n;
        dx.col(c) = inv_std(c) * (dxhat.array() - m1 - xhat.col(c).array() * m2).matrix();
    }
}

}  // namespace

DnetGrads dnet_backward(const DnetWeights& w, const DnetCache& cache,
                        const Eigen::VectorXd& dy) {
    if (!cache.valid) throw NumericError("dnet_backward: stale or missing cache");
    if (dy.size() != cache.y.size()) throw NumericError("dnet_backward: dy size mismatch");
    const DnetConfig& cfg = w.cfg;
    DnetGrads g = DnetWeights::zeros(cfg);

    // Head.
    g.head_w = (cache.n2 * dy).transpose();
    g.head_b(0) = dy.sum();
    const Eigen::MatrixXd dn2 = w.head_w.transpose() * dy.transpose();

    // LN2 <- dropout <- ReLU <- fc2.
    Eigen::MatrixXd dd2;
    layer_norm_backward(dn2, cache.n2hat, cache.inv_std2, w.ln2_g, dd2, g.ln2_g, g.ln2_b);
    const Eigen::MatrixXd dz2 =
        dd2.cwiseProduct(cache.mask2)
           .cwiseProduct((cache.z2.array() > 0.0).cast<double>().matrix());
    g.fc2_w = dz2 * cache.n1.transpose();
    g.fc2_b = dz2.rowwise().sum();
    const Eigen::MatrixXd dn1 = w.fc2_w.transpose() * dz2;

    // LN1 <- dropout <- ReLU <- fc1.
    Eigen::MatrixXd dd1;
    layer_norm_backward(dn1, cache.n1hat, cache.inv_std1, w.ln1_g, dd1, g.ln1_g, g.ln1_b);
    const Eigen::MatrixXd dz1 =
        dd1.cwiseProduct(cache.mask1)
           .cwiseProduct((cache.z1.array() > 0.0).cast<double>().matrix());
    g.fc1_w = dz1 * cache.concat.transpose();
    g.fc1_b = dz1.rowwise().sum();
    const Eigen::MatrixXd dconcat = w.fc1_w.transpose() * dz1;

    // Convolution branch (the raw branch has no parameters below the concat).
    const int out_len = cfg.conv_out_len();
    for (Eigen::Index b = 0; b < dconcat.cols(); ++b) {
        Eigen::MatrixXd dz(cfg.conv_filters, out_len);
        for (int r = 0; r < cfg.conv_filters; ++r) {
            for (int j = 0; j < out_len; ++j) {
                const Eigen::Index idx = r * out_len + j;
                const double gate = cache.conv_z(idx, b) > 0.0 ? 1.0 : 0.0;
                dz(r, j) = dconcat(idx, b) * cache.mask0(idx, b) * gate;
            }
        }
        const Eigen::MatrixXd col = im2col(cache.x_raw.col(b).data(), cfg);
        g.conv_k.noalias() += dz * col.transpose();
        g.conv_b += dz.rowwise().sum();
    }
    return g;
}

// --- optimization ---

AdamState AdamState::zeros(const DnetConfig& cfg) {
    return {DnetWeights::zeros(cfg), DnetWeights::zeros(cfg), 0};
}

void adam_step(DnetWeights& w, const DnetGrads& grads, AdamState& state, double lr,
               const DnetConfig& cfg) {
    state.step += 1;
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2, eps = cfg.adam_eps;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    auto update = [&](Eigen::MatrixXd& wt, const Eigen::MatrixXd& gt, Eigen::MatrixXd& mt,
                      Eigen::MatrixXd& vt) {
        mt = b1 * mt + (1.0 - b1) * gt;
        vt = b2 * vt + (1.0 - b2) * gt.cwiseProduct(gt);
        wt.array() -=
            lr * (mt.array() / bc1) / ((vt.array() / bc2).sqrt() + eps);
    };
    auto update_v = [&](Eigen::VectorXd& wt, const Eigen::VectorXd& gt, Eigen::VectorXd& mt,
                        Eigen::VectorXd& vt) {
        mt = b1 * mt + (1.0 - b1) * gt;
        vt = b2 * vt + (1.0 - b2) * gt.cwiseProduct(gt);
        wt.array() -=
            lr * (mt.array() / bc1) / ((vt.array() / bc2).sqrt() + eps);
    };

    update(w.conv_k, grads.conv_k, state.m.conv_k, state.v.conv_k);
    update_v(w.conv_b, grads.conv_b, state.m.conv_b, state.v.conv_b);
    update(w.fc1_w, grads.fc1_w, state.m.fc1_w, state.v.fc1_w);
    update_v(w.fc1_b, grads.fc1_b, state.m.fc1_b, state.v.fc1_b);
    update_v(w.ln1_g, grads.ln1_g, state.m.ln1_g, state.v.ln1_g);
    update_v(w.ln1_b, grads.ln1_b, state.m.ln1_b, state.v.ln1_b);
    update(w.fc2_w, grads.fc2_w, state.m.fc2_w, state.v.fc2_w);
    update_v(w.fc2_b, grads.fc2_b, state.m.fc2_b, state.v.fc2_b);
    update_v(w.ln2_g, grads.ln2_g, state.m.ln2_g, state.v.ln2_g);
    update_v(w.ln2_b, grads.ln2_b, state.m.ln2_b, state.v.ln2_b);
    update(w.head_w, grads.head_w, state.m.head_w, state.v.head_w);
    update_v(w.head_b, grads.head_b, state.m.head_b, state.v.head_b);
}

double plateau_scheduler(const std::vector<double>& val_history, const DnetConfig& cfg) {
    if (val_history.empty()) throw NumericError("plateau_scheduler: empty history");
    double lr = cfg.lr0;
    double best = val_history.front();
    int stalled = 0;
    for (std::size_t i = 1; i < val_history.size(); ++i) {
        if (val_history[i] < best) {
            best = val_history[i];
            stalled = 0;
        } else if (++stalled >= cfg.plateau_patience) {
            lr = std::max(lr * cfg.plateau_factor, cfg.lr_min);
            stalled = 0;
        }
    }
    return lr;
}

// --- training ---

namespace {

double eval_mae(const DnetWeights& w, const std::vector<Window>& windows, int batch_size) {
    if (windows.empty()) return 0.0;
    std::mt19937_64 rng(0);
    DnetCache cache;
    double abs_sum = 0.0;
    for (std::size_t start = 0; start < windows.size();
         start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end =
            std::min(windows.size(), start + static_cast<std::size_t>(batch_size));
        std::vector<const Window*> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) batch.push_back(&windows[i]);
        const Eigen::VectorXd y = dnet_forward_batch(batch, w, DnetMode::Infer, rng, cache);
        for (std::size_t i = start; i < end; ++i) {
            abs_sum += std::abs(y(static_cast<Eigen::Index>(i - start)) - windows[i].target);
        }
    }
    return abs_sum / static_cast<double>(windows.size());
}

void standardize_from(const std::vector<Window>& train, DnetWeights& w) {
    const DnetConfig& cfg = w.cfg;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(cfg.in_channels);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(cfg.in_channels);
    const double n = static_cast<double>(train.size()) * cfg.window;
    for (const auto& win : train) {
        for (int c = 0; c < cfg.in_channels; ++c) {
            for (int t = 0; t < cfg.window; ++t) {
                mean(c) += win.at(c, t);
                sq(c) += win.at(c, t) * win.at(c, t);
            }
        }
    }
    mean /= n;
    for (int c = 0; c < cfg.in_channels; ++c) {
        const double var = sq(c) / n - mean(c) * mean(c);
        w.norm_mean(c) = mean(c);
        w.norm_std(c) = std::sqrt(std::max(var, 1e-12));
    }
}

}  // namespace

TrainResult dnet_train(const std::vector<Window>& train, const std::vector<Window>& val,
                       const DnetConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw DataError("dnet_train: empty training set");

    std::mt19937_64 rng(cfg.seed);
    DnetWeights w = DnetWeights::init(cfg, rng);
    if (cfg.standardize) standardize_from(train, w);
    AdamState adam = AdamState::zeros(cfg);

    TrainResult result;
    result.weights = w;
    result.best_val_mae = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> monitored;  // validation (or train) loss per epoch
    double lr = cfg.lr0;
    DnetCache cache;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_indices(order, rng);
        double train_abs_sum = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            std::vector<const Window*> batch;
            Eigen::VectorXd targets(static_cast<Eigen::Index>(end - start));
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(&train[order[i]]);
                targets(static_cast<Eigen::Index>(i - start)) = train[order[i]].target;
            }
            const Eigen::VectorXd y =
                dnet_forward_batch(batch, w, DnetMode::Train, rng, cache);
            train_abs_sum += (y - targets).cwiseAbs().sum();
            const DnetGrads grads = dnet_backward(w, cache, mae_loss_grad(y, targets));
            adam_step(w, grads, adam, lr, cfg);
        }
        const double train_mae = train_abs_sum / static_cast<double>(train.size());
        const double val_mae = val.empty() ? eval_mae(w, train, cfg.batch)
                                           : eval_mae(w, val, cfg.batch);

        result.log.push_back({epoch, train_mae, val_mae, lr});
        monitored.push_back(val_mae);
        if (val_mae < result.best_val_mae) {
            result.best_val_mae = val_mae;
            result.best_epoch = epoch;
            result.weights = w;
        }
        lr = plateau_scheduler(monitored, cfg);
    }
    return result;
}

Eigen::VectorXd dnet_predict(const DnetWeights& w, const std::vector<Window>& windows) {
    std::mt19937_64 rng(0);
    DnetCache cache;
    Eigen::VectorXd out(static_cast<Eigen::Index>(windows.size()));
    for (std::size_t start = 0; start < windows.size(); start += 4096) {
        const std::size_t end = std::min(windows.size(), start + 4096);
        std::vector<const Window*> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) batch.push_back(&windows[i]);
        const Eigen::VectorXd y = dnet_forward_batch(batch, w, DnetMode::Infer, rng, cache);
        for (std::size_t i = start; i < end; ++i) {
            out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(i - start));
        }
    }
    return out;
}

std::pair<std::vector<Window>, std::vector<Window>>
split_validation(const std::vector<Window>& all, double fraction) {
    if (fraction < 0.0 || fraction >= 1.0) {
        throw NumericError("split_validation: fraction must lie in [0,1)");
    }
    const auto n_val = static_cast<std::size_t>(std::floor(fraction * all.size()));
    const std::size_t n_train = all.size() - n_val;
    return {std::vector<Window>(all.begin(), all.begin() + n_train),
            std::vector<Window>(all.begin() + n_train, all.end())};
}

// --- persistence ---

namespace {

constexpr char kMagic[8] = {'D', 'N', 'E', 'T', '0', '0', '0', '1'};

void append_tensor(std::vector<double>& flat, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
    }
}

void append_tensor(std::vector<double>& flat, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) flat.push_back(v(i));
}

json config_to_json(const DnetConfig& c) {
    return json{{"in_channels", c.in_channels}, {"window", c.window},
                {"conv_filters", c.conv_filters}, {"kernel_time", c.kernel_time},
                {"fc1", c.fc1}, {"fc2", c.fc2}, {"dropout_flat", c.dropout_flat},
                {"dropout_fc", c.dropout_fc}, {"ln_eps", c.ln_eps}, {"lr0", c.lr0},
                {"batch", c.batch}, {"epochs", c.epochs},
                {"plateau_factor", c.plateau_factor},
                {"plateau_patience", c.plateau_patience}, {"lr_min", c.lr_min},
                {"adam_beta1", c.adam_beta1}, {"adam_beta2", c.adam_beta2},
                {"adam_eps", c.adam_eps}, {"val_fraction", c.val_fraction},
                {"standardize", c.standardize}, {"seed", c.seed}};
}

DnetConfig config_from_json(const json& j) {
    DnetConfig c;
    c.in_channels = j.at("in_channels");
    c.window = j.at("window");
    c.conv_filters = j.at("conv_filters");
    c.kernel_time = j.at("kernel_time");
    c.fc1 = j.at("fc1");
    c.fc2 = j.at("fc2");
    c.dropout_flat = j.at("dropout_flat");
    c.dropout_fc = j.at("dropout_fc");
    c.ln_eps = j.at("ln_eps");
    c.lr0 = j.at("lr0");
    c.batch = j.at("batch");
    c.epochs = j.at("epochs");
    c.plateau_factor = j.at("plateau_factor");
    c.plateau_patience = j.at("plateau_patience");
    c.lr_min = j.at("lr_min");
    c.adam_beta1 = j.at("adam_beta1");
    c.adam_beta2 = j.at("adam_beta2");
    c.adam_eps = j.at("adam_eps");
    c.val_fraction = j.at("val_fraction");
    c.standardize = j.at("standardize");
    c.seed = j.at("seed");
    return c;
}

}  // namespace

void save_weights(const std::string& path, const DnetWeights& w, std::uint64_t seed,
                  const std::string& log_digest) {
    json header;
    header["format_version"] = 1;
    header["config"] = config_to_json(w.cfg);
    header["seed"] = seed;
    header["training_log_digest"] = log_digest;
    json shapes = json::array();
    w.for_each_tensor([&](const auto& t) {
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Eigen::MatrixXd>) {
            shapes.push_back({t.rows(), t.cols()});
        } else {
            shapes.push_back({t.size()});
        }
    });
    shapes.push_back({w.norm_mean.size()});
    shapes.push_back({w.norm_std.size()});
    header["shapes"] = shapes;

    std::vector<double> flat;
    flat.reserve(w.cfg.parameter_count() + 12);
    w.for_each_tensor([&](const auto& t) { append_tensor(flat, t); });
    append_tensor(flat, w.norm_mean);
    append_tensor(flat, w.norm_std);

    const std::string head = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open weights file for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t hlen = head.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(reinterpret_cast<const char*>(flat.data()),
              static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!out) throw DataError("failed writing weights file: " + path);
}

namespace {

void read_tensor(const std::vector<double>& flat, std::size_t& pos, Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = flat.at(pos++);
    }
}

void read_tensor(const std::vector<double>& flat, std::size_t& pos, Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = flat.at(pos++);
}

}  // namespace

DnetWeights load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open weights file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw DataError("not a weights file (bad magic): " + path);
    }
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string head(hlen, '\0');
    in.read(head.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw DataError("truncated weights header: " + path);

    json header = json::parse(head, nullptr, false);
    if (header.is_discarded()) throw DataError("invalid weights header JSON: " + path);
    const DnetConfig cfg = config_from_json(header.at("config"));
    DnetWeights w = DnetWeights::zeros(cfg);

    const std::size_t n = cfg.parameter_count() + 2 * cfg.in_channels;
    std::vector<double> flat(n);
    in.read(reinterpret_cast<char*>(flat.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw DataError("truncated weights payload: " + path);

    std::size_t pos = 0;
    w.for_each_tensor([&](auto& t) { read_tensor(flat, pos, t); });
    read_tensor(flat, pos, w.norm_mean);
    read_tensor(flat, pos, w.norm_std);
    return w;
}

std::string render_training_log(const std::vector<EpochLog>& log) {
    std::ostringstream os;
    os << "epoch,train_mae,val_mae,lr\n";
    char line[128];
    for (const auto& e : log) {
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g\n", e.epoch, e.train_mae,
                      e.val_mae, e.lr);
        os << line;
    }
    return os.str();
}

}  // namespace morpinet
