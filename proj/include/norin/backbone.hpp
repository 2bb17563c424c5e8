#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "norin/array.hpp"
#include "norin/normalizers.hpp"
#include "norin/series.hpp"

namespace norin {

/// Channel-independent linear forecaster: out[:, c] = W z[:, c] + b.
/// With per_channel set each channel has its own (W, b); otherwise one pair is
/// shared by all channels.
struct LinearBackbone {
    std::size_t T = 0;
    std::size_t H = 0;
    std::size_t slots = 1;  // 1, or C when per_channel
    bool per_channel = false;
    std::vector<double> W;  // (slots, H, T)
    std::vector<double> b;  // (slots, H)

    std::size_t slot(std::size_t c) const { return per_channel ? c : 0; }
    const double* weights(std::size_t c) const { return W.data() + slot(c) * H * T; }
    const double* bias(std::size_t c) const { return b.data() + slot(c) * H; }

    bool operator==(const LinearBackbone&) const = default;
};

/// W ~ U[-1/sqrt(T), 1/sqrt(T)] from the seeded generator, b = 0.
LinearBackbone init_backbone(std::size_t T, std::size_t H, std::size_t C, std::uint64_t seed, bool per_channel = false);

/// (N, T, C) -> (N, H, C).
Array3 forward(const LinearBackbone& backbone, const Array3& z_in);

struct NormalizerSpec {
    NormalizerKind kind = NormalizerKind::NoRIN;
    bool revin_affine = false;  // learnable (gamma, beta) after the RevIN z-score
};

/// Everything trainable or frozen that maps a lookback to a forecast.
struct Model {
    NormalizerKind kind = NormalizerKind::NoRIN;
    LinearBackbone backbone;
    ShapeParams shape;  // used by NoRIN only
    AffinePost post;    // used by RevIN only
};

/// Lookback statistics for the normalizer kind: median/MAD for NoRIN,
/// mean/std for RevIN, and (0, 1) for the identity normalizer.
InstanceStats stats_for(NormalizerKind kind, const Array3& lookbacks);

/// y_hat = inverse(f(forward(x)); s(x)) for every window.
Array3 predict(const Model& model, const Array3& lookbacks, const InstanceStats& stats);

struct Gradients {
    double loss = 0.0;
    std::vector<double> dW;
    std::vector<double> db;
    std::vector<double> d_gamma;    // RevIN affine, when enabled
    std::vector<double> d_beta;
    std::vector<double> d_delta;    // per channel; only filled when joint
    std::vector<double> d_epsilon;  // per channel; only filled when joint
};

/// Original-space MSE of the windows in `indices` (all windows when empty)
/// and its gradient with respect to the backbone, the RevIN affine (when
/// enabled) and, when `joint` is set, the per-channel NoRIN shape through
/// both the forward and the inverse map.
Gradients loss_and_grads(const Model& model, const WindowBatch& batch, const InstanceStats& stats,
                         std::span<const std::size_t> indices, bool joint);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
};

/// One decoupled-weight-decay Adam update; `step` counts from 1.
void adamw_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& config,
                long step);

struct TrainConfig {
    std::size_t T = 96;
    std::size_t H = 24;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
    int early_stop_patience = 3;  // <= 0 disables early stopping
    bool joint_shape_training = false;
    double shape_lr = 1e-2;
    bool per_channel_weights = false;

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct SplitMetrics {
    double mse = 0.0;
    double mae = 0.0;
};

struct ShapeSnapshot {
    std::size_t epoch = 0;
    std::vector<double> delta;
    std::vector<double> epsilon;
    bool clamped = false;  // delta hit the 1e-3 floor during this epoch
};

struct RunResult {
    std::string config_hash;
    std::uint64_t seed = 0;
    NormalizerSpec normalizer;
    SplitMetrics train;
    SplitMetrics val;
    SplitMetrics test;
    double best_val_mse = 0.0;
    std::size_t best_epoch = 0;  // 0 means the initial parameters
    std::size_t epochs_run = 0;
    std::vector<double> val_trace;
    ShapeParams initial_shape;
    ShapeParams final_shape;
    std::vector<ShapeSnapshot> shape_trajectory;  // joint mode only
    Model model;                                   // restored best-val parameters
};

nlohmann::json to_json(const RunResult& run);

/// Pre-sliced windows and lookback statistics of one split.
struct SplitData {
    WindowBatch windows;
    InstanceStats stats;
};

SplitData prepare_split(const MultiSeries& series, const SplitSpec& split, Part part, std::size_t T, std::size_t H,
                        NormalizerKind kind);

SplitMetrics evaluate(const Model& model, const SplitData& data);

/// Mini-batch AdamW training in the original space with early stopping on
/// validation MSE. The best-validation parameters are restored before test
/// metrics are computed. Shape parameters stay frozen unless
/// config.joint_shape_training is set. Deterministic per (inputs, config).
RunResult train(const MultiSeries& series, const SplitSpec& split, const NormalizerSpec& normalizer,
                const ShapeParams& shape, const TrainConfig& config);

/// Stable hex fingerprint of the data, split, normalizer, shape and config.
std::string config_fingerprint(const MultiSeries& series, const SplitSpec& split, const NormalizerSpec& normalizer,
                               const ShapeParams& shape, const TrainConfig& config);

std::string fnv1a_hex(std::string_view bytes);

/// Flat little-endian float64 arrays behind a one-line JSON header.
void save_checkpoint(const std::string& path, const Model& model, std::uint64_t seed, const std::string& config_hash);
Model load_checkpoint(const std::string& path);

}  // namespace norin
