#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "updrs/error.hpp"
#include "updrs/lbfgs.hpp"
#include "updrs/linalg.hpp"
#include "updrs/preprocess.hpp"
#include "updrs/rng.hpp"
#include "updrs/stats.hpp"

namespace updrs {

/// Feed-forward regression network: ReLU hidden layers, scalar identity
/// output. The optional normalizer lets a trained model consume raw feature
/// rows at inference; forward() itself never rescales.
struct MlpModel {
    std::vector<std::size_t> layer_dims;          // [d_in, hidden..., 1]
    std::vector<Matrix> weights;                  // weights[l]: dims[l+1] x dims[l]
    std::vector<std::vector<double>> biases;      // biases[l]: dims[l+1]
    std::vector<std::string> activations;         // "relu" hidden, "identity" output
    std::optional<NormalizerParams> normalizer;
    std::vector<std::string> feature_names;

    std::size_t d_in() const { return layer_dims.front(); }
    std::size_t num_layers() const { return weights.size(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
        return n;
    }
};

struct MlpTrainConfig {
    double lambda = 0.0;
    std::size_t max_iterations = 1000;
    double grad_tol = 1e-6;
    std::size_t memory = 10;
    std::uint64_t seed = 1;
    // Trial step of the first line search only; later searches start at 1.
    double first_step = 0.1;
    std::vector<std::size_t> hidden = {25, 25, 25};
};

/// Scaled-uniform fan-based initialisation: every weight is drawn from
/// U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))); biases start at 0.
inline MlpModel init_mlp(std::size_t d_in, std::uint64_t seed,
                         const std::vector<std::size_t>& hidden = {25, 25, 25}) {
    if (d_in < 1) throw ShapeMismatch("init_mlp: d_in must be positive");
    MlpModel model;
    model.layer_dims.push_back(d_in);
    for (auto h : hidden) model.layer_dims.push_back(h);
    model.layer_dims.push_back(1);

    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
        const std::size_t fan_in = model.layer_dims[l], fan_out = model.layer_dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (auto& v : w.data) v = rng.uniform(-bound, bound);
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(fan_out, 0.0);
        model.activations.push_back(l + 2 < model.layer_dims.size() ? "relu" : "identity");
    }
    return model;
}

inline double forward(const MlpModel& model, std::span<const double> x) {
    if (x.size() != model.d_in()) throw ShapeMismatch("forward: input size mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw NonFiniteInput("forward: non-finite input");
    std::vector<double> act(x.begin(), x.end()), next;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const auto& w = model.weights[l];
        next.assign(w.rows, 0.0);
        for (std::size_t r = 0; r < w.rows; ++r) {
            double s = model.biases[l][r];
            const double* wr = w.row(r);
            for (std::size_t c = 0; c < w.cols; ++c) s += wr[c] * act[c];
            next[r] = model.activations[l] == "relu" ? std::max(0.0, s) : s;
        }
        act.swap(next);
    }
    return act[0];
}

/// Inference on a raw feature row: re-applies the stored normalizer if any.
inline double mlp_predict(const MlpModel& model, std::span<const double> raw) {
    if (!model.normalizer) return forward(model, raw);
    if (raw.size() != model.feature_names.size())
        throw ShapeMismatch("mlp_predict: input size mismatch");
    std::vector<double> x(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const ColumnStats* s = model.normalizer->find(model.feature_names[i]);
        x[i] = s ? normalize_value(*s, model.normalizer->kind, raw[i]) : raw[i];
    }
    return forward(model, x);
}

// ---------------------------------------------------------------------------
// Flat parameter vector <-> model

inline std::vector<double> mlp_pack(const MlpModel& model) {
    std::vector<double> flat;
    flat.reserve(model.parameter_count());
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        flat.insert(flat.end(), model.weights[l].data.begin(), model.weights[l].data.end());
        flat.insert(flat.end(), model.biases[l].begin(), model.biases[l].end());
    }
    return flat;
}

inline void mlp_unpack(MlpModel& model, std::span<const double> flat) {
    std::size_t pos = 0;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), model.weights[l].size(),
                    model.weights[l].data.begin());
        pos += model.weights[l].size();
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), model.biases[l].size(),
                    model.biases[l].begin());
        pos += model.biases[l].size();
    }
    if (pos != flat.size()) throw ShapeMismatch("mlp_unpack: parameter count mismatch");
}

/// Mean squared error plus lambda * ||W||^2 (weights only, not biases), with
/// the exact analytic gradient. The ReLU subgradient at 0 is taken as 0.
inline double loss_and_grad(const MlpModel& model, const Matrix& x, const std::vector<double>& y,
                            double lambda, std::vector<double>& grad) {
    const std::size_t n = x.rows;
    if (n == 0 || y.size() != n) throw ShapeMismatch("loss_and_grad: X/y mismatch");
    if (x.cols != model.d_in()) throw ShapeMismatch("loss_and_grad: feature count mismatch");
    const std::size_t layers = model.num_layers();

    // forward, keeping activations for the backward pass
    std::vector<Matrix> acts(layers + 1);
    acts[0] = x;
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix z(n, model.weights[l].rows);
        gemm(false, true, 1.0, acts[l], model.weights[l], 0.0, z);
        for (std::size_t r = 0; r < n; ++r) {
            double* zr = z.row(r);
            for (std::size_t c = 0; c < z.cols; ++c) zr[c] += model.biases[l][c];
        }
        if (model.activations[l] == "relu")
            for (auto& v : z.data) v = v > 0.0 ? v : 0.0;
        acts[l + 1] = std::move(z);
    }

    double loss = 0.0;
    Matrix delta(n, 1);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = acts[layers](i, 0) - y[i];
        loss += r * r;
        delta(i, 0) = 2.0 * r * inv_n;
    }
    loss *= inv_n;

    grad.assign(model.parameter_count(), 0.0);
    // flat offsets per layer
    std::vector<std::size_t> offset(layers);
    std::size_t pos = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        offset[l] = pos;
        pos += model.weights[l].size() + model.biases[l].size();
    }

    for (std::size_t l = layers; l-- > 0;) {
        Matrix dw(model.weights[l].rows, model.weights[l].cols);
        gemm(true, false, 1.0, delta, acts[l], 0.0, dw);
        double* gw = grad.data() + offset[l];
        for (std::size_t i = 0; i < dw.size(); ++i)
            gw[i] = dw.data[i] + 2.0 * lambda * model.weights[l].data[i];
        double* gb = grad.data() + offset[l] + model.weights[l].size();
        for (std::size_t r = 0; r < n; ++r) {
            const double* dr = delta.row(r);
            for (std::size_t c = 0; c < delta.cols; ++c) gb[c] += dr[c];
        }
        if (l > 0) {
            Matrix prev(n, model.weights[l].cols);
            gemm(false, false, 1.0, delta, model.weights[l], 0.0, prev);
            // acts[l] already has ReLU applied; its positivity marks active units
            for (std::size_t i = 0; i < prev.size(); ++i)
                if (acts[l].data[i] <= 0.0) prev.data[i] = 0.0;
            delta = std::move(prev);
        }
    }

    if (lambda != 0.0)
        for (std::size_t l = 0; l < layers; ++l)
            for (double v : model.weights[l].data) loss += lambda * v * v;
    return loss;
}

struct MlpTrainResult {
    MlpModel model;
    OptimTrace trace;
    double train_mse = 0.0;
    double train_r2 = 0.0;
};

inline std::vector<double> mlp_predict_batch(const MlpModel& model, const Matrix& x) {
    Matrix act = x;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        Matrix z(act.rows, model.weights[l].rows);
        gemm(false, true, 1.0, act, model.weights[l], 0.0, z);
        for (std::size_t r = 0; r < z.rows; ++r) {
            double* zr = z.row(r);
            for (std::size_t c = 0; c < z.cols; ++c) zr[c] += model.biases[l][c];
        }
        if (model.activations[l] == "relu")
            for (auto& v : z.data) v = v > 0.0 ? v : 0.0;
        act = std::move(z);
    }
    return act.data;
}

/// init_mlp followed by L-BFGS on loss_and_grad. Features are expected to be
/// normalized already; targets stay in raw units.
inline MlpTrainResult train_mlp(const Matrix& x, const std::vector<double>& y,
                                const MlpTrainConfig& cfg) {
    if (x.rows < 2) throw ShapeMismatch("train_mlp: need at least 2 rows");
    MlpTrainResult result;
    result.model = init_mlp(x.cols, cfg.seed, cfg.hidden);

    auto final_metrics = [&]() {
        const auto pred = mlp_predict_batch(result.model, x);
        double se = 0.0, st = 0.0;
        const double ym = mean(y);
        for (std::size_t i = 0; i < y.size(); ++i) {
            se += (pred[i] - y[i]) * (pred[i] - y[i]);
            st += (y[i] - ym) * (y[i] - ym);
        }
        result.train_mse = se / static_cast<double>(y.size());
        result.train_r2 = st > 0.0 ? 1.0 - se / st : 0.0;
    };

    if (cfg.max_iterations == 0) {
        final_metrics();
        return result;
    }

    MlpModel scratch = result.model;
    Objective obj = [&](const std::vector<double>& params, std::vector<double>& grad) {
        mlp_unpack(scratch, params);
        return loss_and_grad(scratch, x, y, cfg.lambda, grad);
    };

    LbfgsConfig lcfg;
    lcfg.memory = cfg.memory;
    lcfg.grad_tol = cfg.grad_tol;
    lcfg.max_iterations = cfg.max_iterations;
    lcfg.first_step = cfg.first_step;
    auto opt = lbfgs_minimize(obj, mlp_pack(result.model), lcfg);
    mlp_unpack(result.model, opt.x);
    result.trace = std::move(opt.trace);
    final_metrics();
    return result;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json mlp_to_json(const MlpModel& model) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < model.weights[l].rows; ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t c = 0; c < model.weights[l].cols; ++c)
                row.push_back(model.weights[l](r, c));
            rows.push_back(std::move(row));
        }
        layers.push_back({{"weights", rows},
                          {"bias", model.biases[l]},
                          {"activation", model.activations[l]}});
    }
    nlohmann::json j = {{"layer_dims", model.layer_dims}, {"layers", layers}};
    j["normalizer"] = model.normalizer ? model.normalizer->to_json() : nlohmann::json();
    j["feature_names"] = model.feature_names;
    return j;
}

inline MlpModel mlp_from_json(const nlohmann::json& j) {
    MlpModel model;
    model.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    for (const auto& layer : j.at("layers")) {
        const auto& rows = layer.at("weights");
        Matrix w(rows.size(), rows.empty() ? 0 : rows[0].size());
        for (std::size_t r = 0; r < w.rows; ++r)
            for (std::size_t c = 0; c < w.cols; ++c) w(r, c) = rows[r][c].get<double>();
        model.weights.push_back(std::move(w));
        model.biases.push_back(layer.at("bias").get<std::vector<double>>());
        model.activations.push_back(layer.at("activation").get<std::string>());
    }
    if (j.contains("normalizer") && !j.at("normalizer").is_null())
        model.normalizer = NormalizerParams::from_json(j.at("normalizer"));
    if (j.contains("feature_names"))
        model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    return model;
}

}  // namespace updrs
