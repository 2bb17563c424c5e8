#include "norin/backbone.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "norin/errors.hpp"
#include "norin/rng.hpp"

namespace norin {

LinearBackbone init_backbone(std::size_t T, std::size_t H, std::size_t C, std::uint64_t seed, bool per_channel) {
    if (T == 0 || H == 0 || C == 0) throw DataError("backbone dimensions must be positive");
    LinearBackbone bb;
    bb.T = T;
    bb.H = H;
    bb.per_channel = per_channel;
    bb.slots = per_channel ? C : 1;
    bb.W.resize(bb.slots * H * T);
    bb.b.assign(bb.slots * H, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(T));
    Rng rng(seed);
    for (double& w : bb.W) w = rng.uniform(-bound, bound);
    return bb;
}

Array3 forward(const LinearBackbone& bb, const Array3& z_in) {
    if (z_in.t != bb.T) throw DataError("backbone input length does not match T");
    if (bb.per_channel && z_in.c != bb.slots) throw DataError("backbone channel count does not match input");
    Array3 out(z_in.n, bb.H, z_in.c);
    for (std::size_t i = 0; i < z_in.n; ++i)
        for (std::size_t c = 0; c < z_in.c; ++c) {
            const double* W = bb.weights(c);
            const double* b = bb.bias(c);
            for (std::size_t h = 0; h < bb.H; ++h) {
                double acc = b[h];
                for (std::size_t t = 0; t < bb.T; ++t) acc += W[h * bb.T + t] * z_in(i, t, c);
                out(i, h, c) = acc;
            }
        }
    return out;
}

InstanceStats stats_for(NormalizerKind kind, const Array3& lookbacks) {
    switch (kind) {
        case NormalizerKind::NoRIN: return robust_loc_scale(lookbacks);
        case NormalizerKind::RevIN: return mean_std_stats(lookbacks);
        case NormalizerKind::None: break;
    }
    return InstanceStats{Matrix(lookbacks.n, lookbacks.c, 0.0), Matrix(lookbacks.n, lookbacks.c, 1.0),
                         std::vector<std::uint8_t>(lookbacks.n * lookbacks.c, 0), StatsKind::MeanStd};
}

namespace {

double normalize(const Model& m, double x, std::size_t c, double loc, double scale) {
    switch (m.kind) {
        case NormalizerKind::None: return x;
        case NormalizerKind::RevIN: return m.post.g(c) * (x - loc) / scale + m.post.b(c);
        case NormalizerKind::NoRIN: return jsu_forward_scalar(x, m.shape.delta[c], m.shape.epsilon[c], loc, scale);
    }
    return x;
}

double denormalize(const Model& m, double o, std::size_t c, double loc, double scale) {
    switch (m.kind) {
        case NormalizerKind::None: return o;
        case NormalizerKind::RevIN: return loc + scale * (o - m.post.b(c)) / m.post.g(c);
        case NormalizerKind::NoRIN: return jsu_inverse_scalar(o, m.shape.delta[c], m.shape.epsilon[c], loc, scale);
    }
    return o;
}

void check_model(const Model& m, std::size_t T, std::size_t H, std::size_t C) {
    if (m.backbone.T != T || m.backbone.H != H) throw DataError("backbone dimensions do not match windows");
    if (m.backbone.per_channel && m.backbone.slots != C) throw DataError("backbone channel count does not match");
    if (m.kind == NormalizerKind::NoRIN) {
        if (m.shape.channels_count() != C) throw DataError("shape parameters do not match channel count");
        for (double d : m.shape.delta)
            if (!(d > 0.0)) throw DataError("shape delta must be positive");
    }
    if (m.kind == NormalizerKind::RevIN && m.post.enabled) {
        if (m.post.gamma.size() != C || m.post.beta.size() != C) throw DataError("affine post does not match channels");
        for (double g : m.post.gamma)
            if (g == 0.0) throw DataError("affine gamma must be nonzero");
    }
}

// Shared kernel of loss_and_grads. `normalized` optionally supplies the
// already-normalized lookbacks (frozen normalizer only).
Gradients loss_and_grads_impl(const Model& model, const WindowBatch& batch, const InstanceStats& stats,
                              std::span<const std::size_t> indices, bool joint, const Array3* normalized) {
    const std::size_t T = batch.T, H = batch.H, C = batch.channels();
    check_model(model, T, H, C);
    if (stats.windows() != batch.size() || stats.channels() != C) throw DataError("statistics do not match batch");

    const LinearBackbone& bb = model.backbone;
    const bool norin = model.kind == NormalizerKind::NoRIN;
    const bool affine = model.kind == NormalizerKind::RevIN && model.post.enabled;
    const bool shape_grads = joint && norin;
    const bool need_dz = shape_grads || affine;

    Gradients g;
    g.dW.assign(bb.W.size(), 0.0);
    g.db.assign(bb.b.size(), 0.0);
    if (affine) {
        g.d_gamma.assign(C, 0.0);
        g.d_beta.assign(C, 0.0);
    }
    if (shape_grads) {
        g.d_delta.assign(C, 0.0);
        g.d_epsilon.assign(C, 0.0);
    }

    std::vector<std::size_t> all;
    if (indices.empty()) {
        all.resize(batch.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        indices = all;
    }
    const double M = static_cast<double>(indices.size() * H * C);

    std::vector<double> x(T), z(T), o(H), go(H), dz(T);
    for (std::size_t i : indices) {
        for (std::size_t c = 0; c < C; ++c) {
            const double loc = stats.loc(i, c), scale = stats.scale(i, c);
            for (std::size_t t = 0; t < T; ++t) {
                x[t] = batch.lookbacks(i, t, c);
                z[t] = normalized ? (*normalized)(i, t, c) : normalize(model, x[t], c, loc, scale);
            }
            const double* W = bb.weights(c);
            const double* b = bb.bias(c);
            for (std::size_t h = 0; h < H; ++h) {
                double acc = b[h];
                const double* Wh = W + h * T;
                for (std::size_t t = 0; t < T; ++t) acc += Wh[t] * z[t];
                o[h] = acc;
            }
            for (std::size_t h = 0; h < H; ++h) {
                const double y_hat = denormalize(model, o[h], c, loc, scale);
                const double r = y_hat - batch.horizons(i, h, c);
                g.loss += r * r;
                const double dy = 2.0 * r / M;
                double d_o = 1.0;
                if (norin) {
                    const auto p = jsu_inverse_partials(o[h], model.shape.delta[c], model.shape.epsilon[c], scale);
                    d_o = p.d_z;
                    if (shape_grads) {
                        g.d_delta[c] += dy * p.d_delta;
                        g.d_epsilon[c] += dy * p.d_epsilon;
                    }
                } else if (model.kind == NormalizerKind::RevIN) {
                    const double gam = model.post.g(c);
                    d_o = scale / gam;
                    if (affine) {
                        g.d_gamma[c] += dy * (-scale * (o[h] - model.post.b(c)) / (gam * gam));
                        g.d_beta[c] += dy * (-scale / gam);
                    }
                }
                go[h] = dy * d_o;
            }
            double* dW = g.dW.data() + bb.slot(c) * H * T;
            double* db = g.db.data() + bb.slot(c) * H;
            for (std::size_t h = 0; h < H; ++h) {
                db[h] += go[h];
                double* dWh = dW + h * T;
                for (std::size_t t = 0; t < T; ++t) dWh[t] += go[h] * z[t];
            }
            if (!need_dz) continue;
            std::fill(dz.begin(), dz.end(), 0.0);
            for (std::size_t h = 0; h < H; ++h) {
                const double* Wh = W + h * T;
                for (std::size_t t = 0; t < T; ++t) dz[t] += Wh[t] * go[h];
            }
            for (std::size_t t = 0; t < T; ++t) {
                const double u = (x[t] - loc) / scale;
                if (shape_grads) {
                    g.d_delta[c] += dz[t] * std::asinh(u);
                    g.d_epsilon[c] += dz[t];
                } else {
                    g.d_gamma[c] += dz[t] * u;
                    g.d_beta[c] += dz[t];
                }
            }
        }
    }
    g.loss /= M;
    return g;
}

}  // namespace

Array3 predict(const Model& model, const Array3& lookbacks, const InstanceStats& stats) {
    const std::size_t N = lookbacks.n, T = lookbacks.t, C = lookbacks.c, H = model.backbone.H;
    check_model(model, T, H, C);
    if (stats.windows() != N || stats.channels() != C) throw DataError("statistics do not match lookbacks");
    Array3 out(N, H, C);
    std::vector<double> z(T);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t c = 0; c < C; ++c) {
            const double loc = stats.loc(i, c), scale = stats.scale(i, c);
            for (std::size_t t = 0; t < T; ++t) z[t] = normalize(model, lookbacks(i, t, c), c, loc, scale);
            const double* W = model.backbone.weights(c);
            const double* b = model.backbone.bias(c);
            for (std::size_t h = 0; h < H; ++h) {
                double acc = b[h];
                for (std::size_t t = 0; t < T; ++t) acc += W[h * T + t] * z[t];
                out(i, h, c) = denormalize(model, acc, c, loc, scale);
            }
        }
    return out;
}

Gradients loss_and_grads(const Model& model, const WindowBatch& batch, const InstanceStats& stats,
                         std::span<const std::size_t> indices, bool joint) {
    return loss_and_grads_impl(model, batch, stats, indices, joint, nullptr);
}

void adamw_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg,
                long step) {
    if (params.size() != grads.size()) throw DataError("adamw: parameter and gradient sizes differ");
    if (step < 1) throw DataError("adamw: step index must start at 1");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double gk = grads[k];
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * gk;
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * gk * gk;
        const double m_hat = state.m[k] / bc1;
        const double v_hat = state.v[k] / bc2;
        params[k] -= cfg.lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * params[k]);
    }
}

void TrainConfig::validate() const {
    if (T == 0 || H == 0) throw DataError("T and H must be positive");
    if (batch_size == 0) throw DataError("batch_size must be positive");
    if (!(lr > 0.0)) throw DataError("lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw DataError("betas must lie in [0, 1)");
    if (!(weight_decay >= 0.0) || !(adam_eps >= 0.0)) throw DataError("weight_decay and adam_eps must be >= 0");
    if (!(shape_lr >= 0.0)) throw DataError("shape_lr must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"T", c.T},
            {"H", c.H},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lr", c.lr},
            {"weight_decay", c.weight_decay},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_eps", c.adam_eps},
            {"seed", c.seed},
            {"early_stop_patience", c.early_stop_patience},
            {"joint_shape_training", c.joint_shape_training},
            {"shape_lr", c.shape_lr},
            {"per_channel_weights", c.per_channel_weights}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
    try {
        c.T = j.value("T", c.T);
        c.H = j.value("H", c.H);
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.lr = j.value("lr", c.lr);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.adam_eps = j.value("adam_eps", c.adam_eps);
        c.seed = j.value("seed", c.seed);
        c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
        c.joint_shape_training = j.value("joint_shape_training", c.joint_shape_training);
        c.shape_lr = j.value("shape_lr", c.shape_lr);
        c.per_channel_weights = j.value("per_channel_weights", c.per_channel_weights);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed train config: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

nlohmann::json metrics_json(const SplitMetrics& m) { return {{"mse", m.mse}, {"mae", m.mae}}; }

}  // namespace

nlohmann::json to_json(const RunResult& r) {
    nlohmann::json traj = nlohmann::json::array();
    for (const auto& s : r.shape_trajectory)
        traj.push_back({{"epoch", s.epoch}, {"delta", s.delta}, {"epsilon", s.epsilon}, {"clamped", s.clamped}});
    nlohmann::json j{{"config_hash", r.config_hash},
                     {"seed", r.seed},
                     {"normalizer", to_string(r.normalizer.kind)},
                     {"revin_affine", r.normalizer.revin_affine},
                     {"train", metrics_json(r.train)},
                     {"val", metrics_json(r.val)},
                     {"test", metrics_json(r.test)},
                     {"best_val_mse", r.best_val_mse},
                     {"best_epoch", r.best_epoch},
                     {"epochs_run", r.epochs_run},
                     {"val_trace", r.val_trace},
                     {"shape_trajectory", traj}};
    if (r.normalizer.kind == NormalizerKind::NoRIN) {
        j["initial_shape"] = to_json(r.initial_shape);
        j["final_shape"] = to_json(r.final_shape);
    }
    return j;
}

SplitData prepare_split(const MultiSeries& series, const SplitSpec& split, Part part, std::size_t T, std::size_t H,
                        NormalizerKind kind) {
    SplitData d{make_windows(series, split, part, T, H), {}};
    d.stats = stats_for(kind, d.windows.lookbacks);
    return d;
}

SplitMetrics evaluate(const Model& model, const SplitData& data) {
    const Array3 pred = predict(model, data.windows.lookbacks, data.stats);
    return {mse(pred.data, data.windows.horizons.data), mae(pred.data, data.windows.horizons.data)};
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_fingerprint(const MultiSeries& series, const SplitSpec& split, const NormalizerSpec& normalizer,
                               const ShapeParams& shape, const TrainConfig& config) {
    const std::string_view raw(reinterpret_cast<const char*>(series.values.data.data()),
                               series.values.data.size() * sizeof(double));
    nlohmann::json j{{"data", fnv1a_hex(raw)},
                     {"L", series.length()},
                     {"channels", series.channel_names},
                     {"split", {split.train_frac, split.val_frac, split.test_frac}},
                     {"normalizer", to_string(normalizer.kind)},
                     {"revin_affine", normalizer.revin_affine},
                     {"config", to_json(config)}};
    if (normalizer.kind == NormalizerKind::NoRIN) j["shape"] = to_json(shape);
    return fnv1a_hex(j.dump());
}

RunResult train(const MultiSeries& series, const SplitSpec& split, const NormalizerSpec& normalizer,
                const ShapeParams& shape, const TrainConfig& config) {
    config.validate();
    series.validate();
    const std::size_t C = series.channels();
    const NormalizerKind kind = normalizer.kind;
    if (kind == NormalizerKind::NoRIN) {
        shape.validate();
        if (shape.channels_count() != C) throw DataError("shape parameters do not match channel count");
    }

    const SplitData train_data = prepare_split(series, split, Part::Train, config.T, config.H, kind);
    const SplitData val_data = prepare_split(series, split, Part::Val, config.T, config.H, kind);
    const SplitData test_data = prepare_split(series, split, Part::Test, config.T, config.H, kind);

    RunResult result;
    result.config_hash = config_fingerprint(series, split, normalizer, shape, config);
    result.seed = config.seed;
    result.normalizer = normalizer;

    Model model;
    model.kind = kind;
    model.backbone = init_backbone(config.T, config.H, C, mix_seed(config.seed, 0), config.per_channel_weights);
    model.shape = kind == NormalizerKind::NoRIN ? shape : ShapeParams{};
    model.post = AffinePost::identity(C, kind == NormalizerKind::RevIN && normalizer.revin_affine);
    result.initial_shape = model.shape;

    const bool joint = config.joint_shape_training && kind == NormalizerKind::NoRIN;
    const bool shared_shape = model.shape.shared;

    // Frozen NoRIN: the normalized train lookbacks never change.
    std::optional<Array3> normalized;
    if (kind == NormalizerKind::NoRIN && !joint)
        normalized = jsu_forward(train_data.windows.lookbacks, train_data.stats, model.shape);

    const AdamConfig backbone_opt{config.lr, config.beta1, config.beta2, config.adam_eps, config.weight_decay};
    const AdamConfig side_opt{config.lr, config.beta1, config.beta2, config.adam_eps, 0.0};
    const AdamConfig shape_opt{config.shape_lr, config.beta1, config.beta2, config.adam_eps, 0.0};
    AdamState state_W, state_b, state_affine, state_shape;

    Model best = model;
    double best_val = evaluate(model, val_data).mse;
    if (!std::isfinite(best_val)) throw RunError("non-finite validation loss at initialization");
    std::size_t best_epoch = 0;

    Rng shuffle_rng(mix_seed(config.seed, 1));
    std::vector<std::size_t> order(train_data.windows.size());
    long step = 0;
    int since_best = 0;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[shuffle_rng.below(k)]);

        bool clamped = false;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, stop - start);
            const Gradients g = loss_and_grads_impl(model, train_data.windows, train_data.stats, idx, joint,
                                                    normalized ? &*normalized : nullptr);
            if (!std::isfinite(g.loss)) {
                std::ostringstream msg;
                msg << "non-finite training loss at epoch " << epoch;
                throw RunError(msg.str());
            }
            ++step;
            adamw_step(model.backbone.W, g.dW, state_W, backbone_opt, step);
            adamw_step(model.backbone.b, g.db, state_b, backbone_opt, step);
            if (model.post.enabled) {
                std::vector<double> p = model.post.gamma;
                p.insert(p.end(), model.post.beta.begin(), model.post.beta.end());
                std::vector<double> gp = g.d_gamma;
                gp.insert(gp.end(), g.d_beta.begin(), g.d_beta.end());
                adamw_step(p, gp, state_affine, side_opt, step);
                std::copy(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(C), model.post.gamma.begin());
                std::copy(p.begin() + static_cast<std::ptrdiff_t>(C), p.end(), model.post.beta.begin());
            }
            if (joint) {
                std::vector<double> p, gp;
                if (shared_shape) {
                    p = {model.shape.delta[0], model.shape.epsilon[0]};
                    gp = {std::accumulate(g.d_delta.begin(), g.d_delta.end(), 0.0),
                          std::accumulate(g.d_epsilon.begin(), g.d_epsilon.end(), 0.0)};
                } else {
                    p = model.shape.delta;
                    p.insert(p.end(), model.shape.epsilon.begin(), model.shape.epsilon.end());
                    gp = g.d_delta;
                    gp.insert(gp.end(), g.d_epsilon.begin(), g.d_epsilon.end());
                }
                adamw_step(p, gp, state_shape, shape_opt, step);
                const std::size_t k = shared_shape ? 1 : C;
                for (std::size_t c = 0; c < C; ++c) {
                    double d = p[shared_shape ? 0 : c];
                    if (d < 1e-3) {
                        d = 1e-3;
                        clamped = true;
                    }
                    model.shape.delta[c] = d;
                    model.shape.epsilon[c] = p[k + (shared_shape ? 0 : c)];
                }
            }
        }

        const double val = evaluate(model, val_data).mse;
        if (!std::isfinite(val)) {
            std::ostringstream msg;
            msg << "non-finite validation loss at epoch " << epoch;
            throw RunError(msg.str());
        }
        result.val_trace.push_back(val);
        result.epochs_run = epoch;
        if (joint) result.shape_trajectory.push_back({epoch, model.shape.delta, model.shape.epsilon, clamped});

        if (val < best_val) {
            best_val = val;
            best = model;
            best_epoch = epoch;
            since_best = 0;
        } else if (config.early_stop_patience > 0 && ++since_best >= config.early_stop_patience) {
            break;
        }
    }

    result.model = std::move(best);
    result.best_val_mse = best_val;
    result.best_epoch = best_epoch;
    result.final_shape = result.model.shape;
    result.train = evaluate(result.model, train_data);
    result.val = evaluate(result.model, val_data);
    result.test = evaluate(result.model, test_data);
    return result;
}

namespace {

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
    for (double d : v) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
}

std::vector<double> read_doubles(std::ifstream& in, std::size_t count, const std::string& path) {
    std::vector<double> v(count);
    for (double& d : v) {
        std::uint64_t bits = 0;
        if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw DataError(path + ": truncated checkpoint");
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        d = std::bit_cast<double>(bits);
    }
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, std::uint64_t seed, const std::string& config_hash) {
    const auto& bb = model.backbone;
    nlohmann::json header{{"format", "norin-checkpoint"},
                          {"version", 1},
                          {"normalizer", to_string(model.kind)},
                          {"T", bb.T},
                          {"H", bb.H},
                          {"slots", bb.slots},
                          {"per_channel", bb.per_channel},
                          {"seed", seed},
                          {"config_hash", config_hash},
                          {"shape", to_json(model.shape)},
                          {"affine", {{"enabled", model.post.enabled}, {"gamma", model.post.gamma}, {"beta", model.post.beta}}},
                          {"arrays", {{"W", bb.W.size()}, {"b", bb.b.size()}}}};
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write checkpoint: " + path);
        out << header.dump() << '\n';
        write_doubles(out, bb.W);
        write_doubles(out, bb.b);
        if (!out) throw DataError("failed writing checkpoint: " + path);
    }
    std::rename(tmp.c_str(), path.c_str());
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty checkpoint");
    Model m;
    try {
        const auto header = nlohmann::json::parse(line);
        if (header.at("format") != "norin-checkpoint") throw DataError(path + ": not a checkpoint");
        m.kind = normalizer_from_string(header.at("normalizer").get<std::string>());
        auto& bb = m.backbone;
        bb.T = header.at("T");
        bb.H = header.at("H");
        bb.slots = header.at("slots");
        bb.per_channel = header.at("per_channel");
        const auto& shape = header.at("shape");
        m.shape.shared = shape.at("shared");
        m.shape.delta = shape.at("delta").get<std::vector<double>>();
        m.shape.epsilon = shape.at("epsilon").get<std::vector<double>>();
        m.shape.channels = shape.at("channels").get<std::vector<std::string>>();
        const auto& affine = header.at("affine");
        m.post.enabled = affine.at("enabled");
        m.post.gamma = affine.at("gamma").get<std::vector<double>>();
        m.post.beta = affine.at("beta").get<std::vector<double>>();
        const std::size_t nW = header.at("arrays").at("W"), nb = header.at("arrays").at("b");
        if (nW != bb.slots * bb.H * bb.T || nb != bb.slots * bb.H) throw DataError(path + ": inconsistent array sizes");
        bb.W = read_doubles(in, nW, path);
        bb.b = read_doubles(in, nb, path);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": corrupt checkpoint header: " + e.what());
    }
    return m;
}

}  // namespace norin
