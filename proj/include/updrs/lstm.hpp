#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "updrs/dataset.hpp"
#include "updrs/error.hpp"
#include "updrs/linalg.hpp"
#include "updrs/rng.hpp"
#include "updrs/stats.hpp"

namespace updrs {

/// Univariate LSTM regressor: one LSTM layer plus a fully connected scalar
/// head. Gate blocks are packed along the 4H axis in the order
/// [input, forget, cell, output]. The stored scaler standardises series
/// values on the way in and de-standardises predictions on the way out.
struct LstmModel {
    std::size_t hidden = 150;
    std::vector<double> w_in;   // 4H input weights (scalar input)
    Matrix u_rec;               // 4H x H recurrent weights
    std::vector<double> bias;   // 4H; forget block initialised to 1
    std::vector<double> head_w; // H
    double head_b = 0.0;
    double scaler_mean = 0.0;
    double scaler_sd = 1.0;

    std::size_t parameter_count() const {
        return w_in.size() + u_rec.size() + bias.size() + head_w.size() + 1;
    }
};

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

inline LstmModel init_lstm(std::size_t hidden, std::uint64_t seed) {
    if (hidden < 1) throw ShapeMismatch("init_lstm: hidden must be positive");
    LstmModel m;
    m.hidden = hidden;
    Rng rng(seed);
    const double wb = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    const double ub = std::sqrt(6.0 / static_cast<double>(2 * hidden));
    m.w_in.resize(4 * hidden);
    for (auto& v : m.w_in) v = rng.uniform(-wb, wb);
    m.u_rec = Matrix(4 * hidden, hidden);
    for (auto& v : m.u_rec.data) v = rng.uniform(-ub, ub);
    m.bias.assign(4 * hidden, 0.0);
    for (std::size_t j = hidden; j < 2 * hidden; ++j) m.bias[j] = 1.0;  // forget gate
    m.head_w.resize(hidden);
    for (auto& v : m.head_w) v = rng.uniform(-wb, wb);
    m.head_b = 0.0;
    return m;
}

/// One recurrence step on a scalar input (reference path; training uses the
/// batched equivalent).
inline void lstm_step(const LstmModel& m, double x, const std::vector<double>& h_prev,
                      const std::vector<double>& c_prev, std::vector<double>& h,
                      std::vector<double>& c) {
    const std::size_t hdim = m.hidden;
    if (h_prev.size() != hdim || c_prev.size() != hdim)
        throw ShapeMismatch("lstm_step: state dimension mismatch");
    if (!std::isfinite(x)) throw NonFiniteInput("lstm_step: non-finite input");
    h.assign(hdim, 0.0);
    c.assign(hdim, 0.0);
    for (std::size_t k = 0; k < hdim; ++k) {
        double pre[4];
        for (std::size_t gate = 0; gate < 4; ++gate) {
            const std::size_t j = gate * hdim + k;
            double s = m.bias[j] + m.w_in[j] * x;
            const double* ur = m.u_rec.row(j);
            for (std::size_t q = 0; q < hdim; ++q) s += ur[q] * h_prev[q];
            pre[gate] = s;
        }
        const double ig = sigmoid(pre[0]);
        const double fg = sigmoid(pre[1]);
        const double gg = std::tanh(pre[2]);
        const double og = sigmoid(pre[3]);
        c[k] = fg * c_prev[k] + ig * gg;
        h[k] = og * std::tanh(c[k]);
    }
}

/// Runs the window through the recurrence from a zero state and applies the
/// head. Input and output are in standardized units.
inline double lstm_forward(const LstmModel& m, std::span<const double> window) {
    if (window.empty()) throw EmptyWindow("lstm_forward: empty window");
    std::vector<double> h(m.hidden, 0.0), c(m.hidden, 0.0), h2, c2;
    for (const double x : window) {
        lstm_step(m, x, h, c, h2, c2);
        h.swap(h2);
        c.swap(c2);
    }
    double out = m.head_b;
    for (std::size_t k = 0; k < m.hidden; ++k) out += m.head_w[k] * h[k];
    return out;
}

// ---------------------------------------------------------------------------
// Sequence construction

/// One supervised sample: standardized input window and next-value target.
struct SeriesSample {
    std::vector<double> window;
    double target = 0.0;
    double subject_id = 0.0;
    int target_stage = 0;
};

struct SequenceSet {
    std::vector<SeriesSample> train;
    std::vector<SeriesSample> validation;
    double scaler_mean = 0.0;
    double scaler_sd = 1.0;
    std::size_t eligible_subjects = 0;
};

/// Builds forecasting samples from per-subject, test_time-ordered
/// motor-UPDRS series. Only subjects with at least one source-stage row and
/// one target-stage row participate. Training windows lie fully inside
/// maximal source-stage spans (their target is simply the next recorded
/// value, whatever its stage); validation windows are those whose target row
/// is in the target stage. The scaler is fitted on the source-stage values of
/// eligible subjects. Synthetic rows carry no real timeline and are ignored.
inline SequenceSet make_sequences(const RecordTable& table, const StageConfig& cfg,
                                  const std::set<int>& source_stages, int target_stage,
                                  std::size_t window) {
    cfg.validate();
    if (window < 1) throw WindowTooLong("make_sequences: window must be >= 1");

    std::map<double, std::vector<std::size_t>> by_subject;
    for (std::size_t i = 0; i < table.n(); ++i)
        if (!table.records[i].synthetic) by_subject[table.records[i].subject_id()].push_back(i);

    // sort each subject's rows by test_time (row order breaks ties)
    for (auto& [sid, rows] : by_subject)
        std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
            return table.records[a].test_time() < table.records[b].test_time();
        });

    auto raw_stage = [&](std::size_t row) {
        return stage_of(table.records[row].motor_updrs(), cfg).value;
    };

    std::vector<std::pair<double, std::vector<std::size_t>>> eligible;
    std::size_t longest = 0;
    for (const auto& [sid, rows] : by_subject) {
        bool has_source = false, has_target = false;
        for (const std::size_t r : rows) {
            const int s = raw_stage(r);
            if (source_stages.count(s)) has_source = true;
            if (s == target_stage) has_target = true;
        }
        if (has_source && has_target) {
            eligible.emplace_back(sid, rows);
            longest = std::max(longest, rows.size());
        }
    }
    if (eligible.empty())
        throw NoEligibleSubjects("make_sequences: no subject has both source and target rows");
    if (window >= longest)
        throw WindowTooLong("make_sequences: window " + std::to_string(window) +
                            " >= longest eligible series " + std::to_string(longest));

    SequenceSet out;
    out.eligible_subjects = eligible.size();

    std::vector<double> source_values;
    for (const auto& [sid, rows] : eligible)
        for (const std::size_t r : rows)
            if (source_stages.count(raw_stage(r)))
                source_values.push_back(table.records[r].motor_updrs());
    out.scaler_mean = mean(source_values);
    out.scaler_sd = stddev(source_values);
    if (out.scaler_sd == 0.0) out.scaler_sd = 1.0;

    auto standardize = [&](double v) { return (v - out.scaler_mean) / out.scaler_sd; };

    for (const auto& [sid, rows] : eligible) {
        const std::size_t m = rows.size();
        std::vector<double> series(m);
        std::vector<int> stages(m);
        for (std::size_t t = 0; t < m; ++t) {
            series[t] = table.records[rows[t]].motor_updrs();
            stages[t] = raw_stage(rows[t]);
        }

        // training windows inside maximal source-stage spans
        std::size_t t = 0;
        while (t < m) {
            if (!source_stages.count(stages[t])) {
                ++t;
                continue;
            }
            std::size_t end = t;
            while (end < m && source_stages.count(stages[end])) ++end;
            if (end - t >= window) {
                for (std::size_t start = t; start + window <= end; ++start) {
                    const std::size_t target_idx = start + window;
                    if (target_idx >= m) break;
                    SeriesSample s;
                    s.subject_id = sid;
                    s.target_stage = stages[target_idx];
                    s.window.resize(window);
                    for (std::size_t q = 0; q < window; ++q)
                        s.window[q] = standardize(series[start + q]);
                    s.target = standardize(series[target_idx]);
                    out.train.push_back(std::move(s));
                }
            }
            t = end;
        }

        // validation windows: target row in the target stage
        for (std::size_t target_idx = window; target_idx < m; ++target_idx) {
            if (stages[target_idx] != target_stage) continue;
            SeriesSample s;
            s.subject_id = sid;
            s.target_stage = target_stage;
            s.window.resize(window);
            for (std::size_t q = 0; q < window; ++q)
                s.window[q] = standardize(series[target_idx - window + q]);
            s.target = standardize(series[target_idx]);
            out.validation.push_back(std::move(s));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m, v;
    std::size_t t = 0;
};

/// Standard Adam with bias correction; the timestep advances on every call.
inline void adam_update(std::vector<double>& params, const std::vector<double>& grads,
                        AdamState& state, const AdamHyper& hyper) {
    if (params.size() != grads.size()) throw ShapeMismatch("adam_update: size mismatch");
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
        state.t = 0;
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.eps);
    }
}

inline std::vector<double> lstm_pack(const LstmModel& m) {
    std::vector<double> flat;
    flat.reserve(m.parameter_count());
    flat.insert(flat.end(), m.w_in.begin(), m.w_in.end());
    flat.insert(flat.end(), m.u_rec.data.begin(), m.u_rec.data.end());
    flat.insert(flat.end(), m.bias.begin(), m.bias.end());
    flat.insert(flat.end(), m.head_w.begin(), m.head_w.end());
    flat.push_back(m.head_b);
    return flat;
}

inline void lstm_unpack(LstmModel& m, std::span<const double> flat) {
    if (flat.size() != m.parameter_count()) throw ShapeMismatch("lstm_unpack: size mismatch");
    std::size_t pos = 0;
    std::copy_n(flat.begin(), m.w_in.size(), m.w_in.begin());
    pos += m.w_in.size();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), m.u_rec.size(),
                m.u_rec.data.begin());
    pos += m.u_rec.size();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), m.bias.size(), m.bias.begin());
    pos += m.bias.size();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), m.head_w.size(),
                m.head_w.begin());
    pos += m.head_w.size();
    m.head_b = flat[pos];
}

namespace detail {

struct LstmBatchWork {
    std::vector<Matrix> gates;   // per step, B x 4H post-activation
    std::vector<Matrix> cells;   // per step, B x H
    std::vector<Matrix> tanh_c;  // per step, B x H
    std::vector<Matrix> hidden;  // per step, B x H
};

/// Batched forward over same-length windows. Returns head outputs.
inline std::vector<double> lstm_forward_batch(const LstmModel& m,
                                              const std::vector<const SeriesSample*>& batch,
                                              LstmBatchWork* work) {
    const std::size_t B = batch.size();
    const std::size_t T = batch.front()->window.size();
    const std::size_t H = m.hidden;

    Matrix h_prev(B, H);
    Matrix gates_pre(B, 4 * H);
    if (work) {
        work->gates.assign(T, Matrix());
        work->cells.assign(T, Matrix());
        work->tanh_c.assign(T, Matrix());
        work->hidden.assign(T, Matrix());
    }
    Matrix c_prev(B, H);

    for (std::size_t t = 0; t < T; ++t) {
        gates_pre = Matrix(B, 4 * H);
        if (t > 0) gemm(false, true, 1.0, h_prev, m.u_rec, 0.0, gates_pre);
        for (std::size_t r = 0; r < B; ++r) {
            const double x = batch[r]->window[t];
            double* gr = gates_pre.row(r);
            for (std::size_t j = 0; j < 4 * H; ++j) gr[j] += m.w_in[j] * x + m.bias[j];
        }
        Matrix c(B, H), tc(B, H), h(B, H);
        for (std::size_t r = 0; r < B; ++r) {
            double* gr = gates_pre.row(r);
            const double* cp = c_prev.row(r);
            double* cr = c.row(r);
            double* tr = tc.row(r);
            double* hr = h.row(r);
            for (std::size_t k = 0; k < H; ++k) {
                const double ig = sigmoid(gr[k]);
                const double fg = sigmoid(gr[H + k]);
                const double gg = std::tanh(gr[2 * H + k]);
                const double og = sigmoid(gr[3 * H + k]);
                gr[k] = ig;
                gr[H + k] = fg;
                gr[2 * H + k] = gg;
                gr[3 * H + k] = og;
                cr[k] = fg * cp[k] + ig * gg;
                tr[k] = std::tanh(cr[k]);
                hr[k] = og * tr[k];
            }
        }
        if (work) {
            work->gates[t] = gates_pre;
            work->cells[t] = c;
            work->tanh_c[t] = tc;
            work->hidden[t] = h;
        }
        h_prev = std::move(h);
        c_prev = std::move(c);
    }

    std::vector<double> preds(B);
    for (std::size_t r = 0; r < B; ++r) {
        double s = m.head_b;
        const double* hr = h_prev.row(r);
        for (std::size_t k = 0; k < H; ++k) s += m.head_w[k] * hr[k];
        preds[r] = s;
    }
    return preds;
}

}  // namespace detail

/// Mean-squared-error BPTT over a batch (standardized units). Gradients are
/// exact; when clip_norm > 0 the whole gradient is rescaled to that global
/// L2 norm after accumulation.
inline double bptt_grad(const LstmModel& m, const std::vector<SeriesSample>& batch,
                        std::vector<double>& grad, double clip_norm = 0.0) {
    if (batch.empty()) throw ShapeMismatch("bptt_grad: empty batch");
    const std::size_t H = m.hidden;
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    std::vector<double> gw_in(4 * H, 0.0), gbias(4 * H, 0.0), ghead_w(H, 0.0);
    Matrix gu(4 * H, H);
    double ghead_b = 0.0;
    double loss = 0.0;

    // group by window length so each batched pass is rectangular
    std::map<std::size_t, std::vector<const SeriesSample*>> groups;
    for (const auto& s : batch) {
        if (s.window.empty()) throw EmptyWindow("bptt_grad: empty window");
        groups[s.window.size()].push_back(&s);
    }

    for (const auto& [T, group] : groups) {
        const std::size_t B = group.size();
        detail::LstmBatchWork work;
        const auto preds = detail::lstm_forward_batch(m, group, &work);

        std::vector<double> dpred(B);
        for (std::size_t r = 0; r < B; ++r) {
            const double res = preds[r] - group[r]->target;
            loss += res * res * inv_n;
            dpred[r] = 2.0 * res * inv_n;
        }

        Matrix dh(B, H), dc(B, H);
        const Matrix& h_last = work.hidden[T - 1];
        for (std::size_t r = 0; r < B; ++r) {
            const double* hr = h_last.row(r);
            double* dhr = dh.row(r);
            for (std::size_t k = 0; k < H; ++k) {
                ghead_w[k] += dpred[r] * hr[k];
                dhr[k] = dpred[r] * m.head_w[k];
            }
            ghead_b += dpred[r];
        }

        Matrix dgates(B, 4 * H);
        for (std::size_t t = T; t-- > 0;) {
            const Matrix& gates = work.gates[t];
            const Matrix& tc = work.tanh_c[t];
            for (std::size_t r = 0; r < B; ++r) {
                const double* gr = gates.row(r);
                const double* tr = tc.row(r);
                const double* cp = t > 0 ? work.cells[t - 1].row(r) : nullptr;
                double* dhr = dh.row(r);
                double* dcr = dc.row(r);
                double* dgr = dgates.row(r);
                for (std::size_t k = 0; k < H; ++k) {
                    const double ig = gr[k], fg = gr[H + k], gg = gr[2 * H + k], og = gr[3 * H + k];
                    const double d_o = dhr[k] * tr[k];
                    const double d_c = dcr[k] + dhr[k] * og * (1.0 - tr[k] * tr[k]);
                    const double d_i = d_c * gg;
                    const double d_g = d_c * ig;
                    const double d_f = t > 0 ? d_c * cp[k] : 0.0;
                    dgr[k] = d_i * ig * (1.0 - ig);
                    dgr[H + k] = d_f * fg * (1.0 - fg);
                    dgr[2 * H + k] = d_g * (1.0 - gg * gg);
                    dgr[3 * H + k] = d_o * og * (1.0 - og);
                    dcr[k] = d_c * fg;  // becomes dc for step t-1
                }
            }
            for (std::size_t r = 0; r < B; ++r) {
                const double x = group[r]->window[t];
                const double* dgr = dgates.row(r);
                for (std::size_t j = 0; j < 4 * H; ++j) {
                    gw_in[j] += dgr[j] * x;
                    gbias[j] += dgr[j];
                }
            }
            if (t > 0) {
                gemm(true, false, 1.0, dgates, work.hidden[t - 1], 1.0, gu);
                gemm(false, false, 1.0, dgates, m.u_rec, 0.0, dh);
            }
        }
    }

    grad.clear();
    grad.reserve(m.parameter_count());
    grad.insert(grad.end(), gw_in.begin(), gw_in.end());
    grad.insert(grad.end(), gu.data.begin(), gu.data.end());
    grad.insert(grad.end(), gbias.begin(), gbias.end());
    grad.insert(grad.end(), ghead_w.begin(), ghead_w.end());
    grad.push_back(ghead_b);

    if (clip_norm > 0.0) {
        const double norm = norm2(grad);
        if (norm > clip_norm) {
            const double scale = clip_norm / norm;
            for (auto& v : grad) v *= scale;
        }
    }
    return loss;
}

struct LstmTrainConfig {
    double learning_rate = 1e-3;
    std::size_t max_epochs = 1000;
    std::size_t validation_frequency = 50;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 1.0;  // <= 0 disables clipping
    std::size_t hidden = 150;
    double scaler_mean = 0.0;
    double scaler_sd = 1.0;
};

struct EpochPoint {
    std::size_t epoch = 0;
    double val_rmse = 0.0;      // raw UPDRS units
    double val_mse = 0.0;       // raw units
    double val_half_mse = 0.0;  // raw units
    double train_loss = 0.0;    // standardized units
};

struct EpochTrace {
    std::vector<EpochPoint> points;

    std::string to_csv() const {
        std::string out = "epoch,val_rmse,val_mse,val_half_mse,train_loss\n";
        for (const auto& p : points)
            out += std::to_string(p.epoch) + "," + format_double(p.val_rmse) + "," +
                   format_double(p.val_mse) + "," + format_double(p.val_half_mse) + "," +
                   format_double(p.train_loss) + "\n";
        return out;
    }
};

inline std::vector<double> lstm_predict_batch(const LstmModel& m,
                                              const std::vector<SeriesSample>& samples) {
    std::vector<double> preds(samples.size());
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < samples.size(); ++i) groups[samples[i].window.size()].push_back(i);
    for (const auto& [T, idx] : groups) {
        std::vector<const SeriesSample*> group;
        group.reserve(idx.size());
        for (const std::size_t i : idx) group.push_back(&samples[i]);
        const auto p = detail::lstm_forward_batch(m, group, nullptr);
        for (std::size_t q = 0; q < idx.size(); ++q) preds[idx[q]] = p[q];
    }
    return preds;
}

struct LstmTrainResult {
    LstmModel model;
    EpochTrace trace;
};

/// Mini-batch Adam for max_epochs passes. Validation RMSE (de-standardized,
/// raw UPDRS units) is recorded at epoch 1 and at every
/// validation_frequency multiple. Deterministic per seed.
inline LstmTrainResult train_lstm(const std::vector<SeriesSample>& train,
                                  const std::vector<SeriesSample>& validation,
                                  const LstmTrainConfig& cfg) {
    if (train.empty() || validation.empty())
        throw ShapeMismatch("train_lstm: train and validation must be nonempty");

    LstmTrainResult result;
    result.model = init_lstm(cfg.hidden, cfg.seed);
    result.model.scaler_mean = cfg.scaler_mean;
    result.model.scaler_sd = cfg.scaler_sd;
    if (cfg.max_epochs == 0) return result;

    auto params = lstm_pack(result.model);
    AdamState adam;
    AdamHyper hyper{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps};

    Rng rng(cfg.seed + 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    auto record_validation = [&](std::size_t epoch, double train_loss) {
        const auto preds = lstm_predict_batch(result.model, validation);
        double se = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const double res = (preds[i] - validation[i].target) * cfg.scaler_sd;
            se += res * res;
        }
        const double mse = se / static_cast<double>(preds.size());
        result.trace.points.push_back(
            {epoch, std::sqrt(mse), mse, 0.5 * mse, train_loss});
    };

    std::vector<double> grad;
    std::vector<SeriesSample> batch;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_se = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
            const double loss = bptt_grad(result.model, batch, grad, cfg.clip_norm);
            epoch_se += loss * static_cast<double>(batch.size());
            adam_update(params, grad, adam, hyper);
            lstm_unpack(result.model, params);
        }
        const double train_loss = epoch_se / static_cast<double>(train.size());
        if (epoch == 1 || epoch % cfg.validation_frequency == 0 || epoch == cfg.max_epochs)
            if (result.trace.points.empty() || result.trace.points.back().epoch != epoch)
                record_validation(epoch, train_loss);
    }
    return result;
}

/// Recursive multi-step forecast. seed_window is in raw UPDRS units; outputs
/// are de-standardized back to raw units.
inline std::vector<double> forecast(const LstmModel& m, std::span<const double> seed_window,
                                    std::size_t horizon) {
    if (seed_window.empty()) throw EmptyWindow("forecast: empty seed window");
    if (horizon < 1) throw Error("forecast: horizon must be >= 1");
    std::vector<double> window(seed_window.size());
    for (std::size_t i = 0; i < window.size(); ++i)
        window[i] = (seed_window[i] - m.scaler_mean) / m.scaler_sd;
    std::vector<double> out;
    out.reserve(horizon);
    for (std::size_t step = 0; step < horizon; ++step) {
        const double pred = lstm_forward(m, window);
        out.push_back(pred * m.scaler_sd + m.scaler_mean);
        window.erase(window.begin());
        window.push_back(pred);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json lstm_to_json(const LstmModel& m) {
    const std::size_t H = m.hidden;
    const char* gate_names[4] = {"i", "f", "g", "o"};
    nlohmann::json j;
    j["hidden"] = H;
    for (std::size_t gate = 0; gate < 4; ++gate) {
        std::vector<double> w(m.w_in.begin() + static_cast<std::ptrdiff_t>(gate * H),
                              m.w_in.begin() + static_cast<std::ptrdiff_t>((gate + 1) * H));
        std::vector<double> b(m.bias.begin() + static_cast<std::ptrdiff_t>(gate * H),
                              m.bias.begin() + static_cast<std::ptrdiff_t>((gate + 1) * H));
        j[std::string("W_") + gate_names[gate]] = w;
        j[std::string("b_") + gate_names[gate]] = b;
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < H; ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t c = 0; c < H; ++c) row.push_back(m.u_rec(gate * H + r, c));
            rows.push_back(std::move(row));
        }
        j[std::string("U_") + gate_names[gate]] = rows;
    }
    j["head_w"] = m.head_w;
    j["head_b"] = m.head_b;
    j["scaler"] = {{"mean", m.scaler_mean}, {"sd", m.scaler_sd}};
    return j;
}

inline LstmModel lstm_from_json(const nlohmann::json& j) {
    LstmModel m;
    m.hidden = j.at("hidden").get<std::size_t>();
    const std::size_t H = m.hidden;
    m.w_in.resize(4 * H);
    m.bias.resize(4 * H);
    m.u_rec = Matrix(4 * H, H);
    const char* gate_names[4] = {"i", "f", "g", "o"};
    for (std::size_t gate = 0; gate < 4; ++gate) {
        const auto w = j.at(std::string("W_") + gate_names[gate]).get<std::vector<double>>();
        const auto b = j.at(std::string("b_") + gate_names[gate]).get<std::vector<double>>();
        std::copy(w.begin(), w.end(), m.w_in.begin() + static_cast<std::ptrdiff_t>(gate * H));
        std::copy(b.begin(), b.end(), m.bias.begin() + static_cast<std::ptrdiff_t>(gate * H));
        const auto& rows = j.at(std::string("U_") + gate_names[gate]);
        for (std::size_t r = 0; r < H; ++r)
            for (std::size_t c = 0; c < H; ++c) m.u_rec(gate * H + r, c) = rows[r][c].get<double>();
    }
    m.head_w = j.at("head_w").get<std::vector<double>>();
    m.head_b = j.at("head_b").get<double>();
    m.scaler_mean = j.at("scaler").at("mean").get<double>();
    m.scaler_sd = j.at("scaler").at("sd").get<double>();
    return m;
}

}  // namespace updrs
