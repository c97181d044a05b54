#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "morpinet/window.hpp"

namespace morpinet {

struct DnetConfig {
    int in_channels = kImuChannels;
    int window = kWindowLen;
    int conv_filters = 7;
    int kernel_time = 2;       // convolution length along time
    int fc1 = 512;
    int fc2 = 32;
    double dropout_flat = 0.1; // after the flattened conv branch
    double dropout_fc = 0.5;   // after each FC+ReLU
    double ln_eps = 1e-5;
    double lr0 = 0.0025;
    int batch = 2048;
    int epochs = 300;
    double plateau_factor = 0.5;
    int plateau_patience = 10;
    double lr_min = 1e-6;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double val_fraction = 0.10;
    bool standardize = false;  // per-channel input standardization (ablation)
    std::uint64_t seed = 0;

    int conv_out_len() const { return window - kernel_time + 1; }          // 23
    int conv_flat() const { return conv_filters * conv_out_len(); }        // 161
    int raw_flat() const { return in_channels * window; }                  // 144
    int concat_dim() const { return conv_flat() + raw_flat(); }            // 305
    std::size_t parameter_count() const;
    void validate() const;
};

/// All learnable parameters. Gradient accumulators share this layout.
struct DnetWeights {
    DnetConfig cfg;
    Eigen::MatrixXd conv_k;  // conv_filters x (in_channels*kernel_time), [r][(c*K + a)]
    Eigen::VectorXd conv_b;
    Eigen::MatrixXd fc1_w;   // fc1 x concat_dim
    Eigen::VectorXd fc1_b;
    Eigen::VectorXd ln1_g, ln1_b;
    Eigen::MatrixXd fc2_w;   // fc2 x fc1
    Eigen::VectorXd fc2_b;
    Eigen::VectorXd ln2_g, ln2_b;
    Eigen::MatrixXd head_w;  // 1 x fc2
    Eigen::VectorXd head_b;  // 1
    // Input standardization (identity unless cfg.standardize); not learnable.
    Eigen::VectorXd norm_mean, norm_std;  // per channel

    static DnetWeights zeros(const DnetConfig& cfg);
    static DnetWeights init(const DnetConfig& cfg, std::mt19937_64& rng);  // uniform fan-in

    template <typename F>
    void for_each_tensor(F&& f) {
        f(conv_k); f(conv_b); f(fc1_w); f(fc1_b); f(ln1_g); f(ln1_b);
        f(fc2_w); f(fc2_b); f(ln2_g); f(ln2_b); f(head_w); f(head_b);
    }
    template <typename F>
    void for_each_tensor(F&& f) const {
        f(conv_k); f(conv_b); f(fc1_w); f(fc1_b); f(ln1_g); f(ln1_b);
        f(fc2_w); f(fc2_b); f(ln2_g); f(ln2_b); f(head_w); f(head_b);
    }
};

using DnetGrads = DnetWeights;

enum class DnetMode { Train, Infer };

/// Intermediates of one batched forward pass, consumed by dnet_backward.
/// Columns index batch elements. Dropout masks are retained so a backward (or a
/// frozen-mask replay) sees exactly the forward's network.
struct DnetCache {
    Eigen::MatrixXd x_raw;    // raw_flat x B
    Eigen::MatrixXd conv_z;   // conv_flat x B (pre-activation)
    Eigen::MatrixXd mask0;    // conv_flat x B
    Eigen::MatrixXd concat;   // concat_dim x B
    Eigen::MatrixXd z1;       // fc1 x B
    Eigen::MatrixXd mask1;
    Eigen::MatrixXd d1;       // LN1 input
    Eigen::MatrixXd n1hat;    // normalized, pre-affine
    Eigen::VectorXd inv_std1; // per column
    Eigen::MatrixXd n1;
    Eigen::MatrixXd z2;
    Eigen::MatrixXd mask2;
    Eigen::MatrixXd d2;
    Eigen::MatrixXd n2hat;
    Eigen::VectorXd inv_std2;
    Eigen::MatrixXd n2;
    Eigen::VectorXd y;        // B
    DnetMode mode = DnetMode::Infer;
    bool valid = false;
};

// --- elementary layer operations ---

/// Valid cross-correlation along time over all input channels, plus per-filter bias,
/// then ReLU. x is one window, output is conv_filters x conv_out_len.
Eigen::MatrixXd conv1d_apply(const Window& x, const Eigen::MatrixXd& k,
                             const Eigen::VectorXd& b);

/// z = W*a + b.
Eigen::VectorXd dense_apply(const Eigen::VectorXd& a, const Eigen::MatrixXd& w,
                            const Eigen::VectorXd& b);

Eigen::VectorXd relu_apply(const Eigen::VectorXd& z);

Eigen::VectorXd layer_norm_apply(const Eigen::VectorXd& z, const Eigen::VectorXd& gain,
                                 const Eigen::VectorXd& bias, double eps = 1e-5);

/// Inverted dropout: train mode zeroes with probability p and scales survivors by
/// 1/(1-p); infer mode is the identity.
Eigen::VectorXd dropout_apply(const Eigen::VectorXd& a, double p, std::mt19937_64& rng,
                              DnetMode mode);

/// L = (1/n) * sum |y_i - yhat_i|.
double mae_loss(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& y);

/// dL/dyhat for the MAE loss; the subgradient at zero residual is 0.
Eigen::VectorXd mae_loss_grad(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& y);

// --- network passes ---

/// Batched forward. In train mode fresh dropout masks are drawn from `rng`.
Eigen::VectorXd dnet_forward_batch(const std::vector<const Window*>& batch,
                                   const DnetWeights& w, DnetMode mode,
                                   std::mt19937_64& rng, DnetCache& cache);

/// Replays a forward pass with the dropout masks already stored in `cache`
/// (for frozen-mask gradient checks).
Eigen::VectorXd dnet_forward_with_masks(const std::vector<const Window*>& batch,
                                        const DnetWeights& w, DnetCache& cache);

/// Single-window forward; returns the regressed distance.
double dnet_forward(const Window& x, const DnetWeights& w, DnetMode mode,
                    std::mt19937_64& rng, DnetCache& cache);
double dnet_infer(const Window& x, const DnetWeights& w);

/// Exact gradients of the cached forward under dL/dy = dy. Throws on an invalid cache.
DnetGrads dnet_backward(const DnetWeights& w, const DnetCache& cache,
                        const Eigen::VectorXd& dy);

// --- optimization ---

struct AdamState {
    DnetWeights m;  // first moments
    DnetWeights v;  // second moments
    long step = 0;

    static AdamState zeros(const DnetConfig& cfg);
};

/// Standard bias-corrected Adam update, in place.
void adam_step(DnetWeights& w, const DnetGrads& grads, AdamState& state, double lr,
               const DnetConfig& cfg);

/// Learning rate implied by a validation-loss history: halved (down to lr_min)
/// every time the best loss fails to improve for plateau_patience epochs.
double plateau_scheduler(const std::vector<double>& val_history, const DnetConfig& cfg);

// --- training ---

struct EpochLog {
    int epoch = 0;
    double train_mae = 0.0;
    double val_mae = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    DnetWeights weights;        // best-validation weights
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_val_mae = 0.0;
};

/// Full training loop: shuffled mini-batches, Adam from cfg.lr0, plateau schedule,
/// best-validation weight selection. Deterministic given cfg.seed. When `val` is
/// empty the training loss drives the schedule and the selection.
TrainResult dnet_train(const std::vector<Window>& train, const std::vector<Window>& val,
                       const DnetConfig& cfg);

/// Infer-mode predictions for a set of windows.
Eigen::VectorXd dnet_predict(const DnetWeights& w, const std::vector<Window>& windows);

/// Contiguous tail split: the last `fraction` of windows become validation.
std::pair<std::vector<Window>, std::vector<Window>>
split_validation(const std::vector<Window>& all, double fraction);

// --- persistence ---

/// Versioned container: JSON header (config, shapes, seed, training-log digest)
/// followed by little-endian float64 arrays in declared order.
void save_weights(const std::string& path, const DnetWeights& w, std::uint64_t seed,
                  const std::string& log_digest);
DnetWeights load_weights(const std::string& path);

/// CSV-rendered training log (epoch,train_mae,val_mae,lr) and its digest.
std::string render_training_log(const std::vector<EpochLog>& log);

}  // namespace morpinet
