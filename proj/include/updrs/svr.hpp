#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "updrs/error.hpp"
#include "updrs/linalg.hpp"
#include "updrs/stats.hpp"

namespace updrs {

/// Gaussian kernel with the scale-divides-distance convention:
/// k(x,z) = exp(-||x-z||^2 / s^2), so kernel_scale 2 means the squared
/// distance is divided by 4.
inline double rbf_kernel(std::span<const double> x, std::span<const double> z, double s) {
    if (x.size() != z.size()) throw ShapeMismatch("rbf_kernel: dimension mismatch");
    if (!(s > 0.0)) throw Error("rbf_kernel: scale must be positive");
    return std::exp(-squared_distance(x, z) / (s * s));
}

struct SvrConfig {
    double kernel_scale = 2.0;
    std::optional<double> box_constraint;  // C; empty = automatic
    std::optional<double> epsilon;         // empty = automatic
    double kkt_tol = 1e-3;
    std::size_t max_iterations = 0;        // 0 = max(200 * n, 200000)
    std::size_t no_progress_limit = 0;     // 0 = 10 * n
    std::size_t cache_limit = 8000;        // full kernel matrix up to this n
    bool track_objective = false;
};

struct SvrAutoParams {
    double box_constraint = 1.0;
    double epsilon = 0.0;
    std::string warning;
};

/// Automatic C and epsilon from the robust spread of the targets:
/// C = iqr(y)/1.349 (the normal-consistent sd estimate) and
/// epsilon = iqr(y)/13.49. A zero IQR falls back to C = 1,
/// epsilon = 0.1 * sd(y), with a warning. Explicit values win.
inline SvrAutoParams resolve_auto(const std::vector<double>& y, const SvrConfig& cfg) {
    if (y.size() < 2) throw ShapeMismatch("resolve_auto: need at least 2 targets");
    SvrAutoParams out;
    const double spread = iqr(y);
    if (spread > 0.0) {
        out.box_constraint = spread / 1.349;
        out.epsilon = spread / 13.49;
    } else {
        out.box_constraint = 1.0;
        out.epsilon = 0.1 * stddev(y);
        out.warning = "zero IQR in targets; using C=1, epsilon=0.1*sd";
    }
    if (cfg.box_constraint) out.box_constraint = *cfg.box_constraint;
    if (cfg.epsilon) out.epsilon = *cfg.epsilon;
    return out;
}

struct SvrDiagnostics {
    std::size_t iterations = 0;
    double final_kkt_violation = 0.0;
    double dual_objective = 0.0;
    bool converged = false;
    std::string warning;
    std::vector<double> objective_trace;  // filled when track_objective is set
};

struct SvrModel {
    double kernel_scale = 2.0;
    double epsilon = 0.0;
    double box_constraint = 0.0;
    double bias = 0.0;
    Matrix support_vectors;                 // rows with |beta| > 1e-12
    std::vector<double> dual_coefficients;  // beta_i = alpha_i - alpha*_i
    SvrDiagnostics diagnostics;
};

namespace detail {

/// Kernel rows, either fully materialized (n <= cache_limit) or recomputed on
/// demand for larger problems.
class KernelProvider {
  public:
    KernelProvider(const Matrix& x, double scale, std::size_t cache_limit)
        : x_(x), inv_s2_(1.0 / (scale * scale)) {
        if (x.rows <= cache_limit) {
            full_ = Matrix(x.rows, x.rows);
            for (std::size_t i = 0; i < x.rows; ++i) {
                double* row = full_->row(i);
                row[i] = 1.0;
                for (std::size_t j = i + 1; j < x.rows; ++j) {
                    const double k =
                        std::exp(-squared_distance(x.row_span(i), x.row_span(j)) * inv_s2_);
                    row[j] = k;
                    (*full_)(j, i) = k;
                }
            }
        } else {
            scratch_.resize(x.rows);
        }
    }

    const double* row(std::size_t i) {
        if (full_) return full_->row(i);
        for (std::size_t j = 0; j < x_.rows; ++j)
            scratch_[j] = std::exp(-squared_distance(x_.row_span(i), x_.row_span(j)) * inv_s2_);
        return scratch_.data();
    }

    double at(std::size_t i, std::size_t j) {
        if (full_) return (*full_)(i, j);
        return std::exp(-squared_distance(x_.row_span(i), x_.row_span(j)) * inv_s2_);
    }

  private:
    const Matrix& x_;
    double inv_s2_;
    std::optional<Matrix> full_;
    std::vector<double> scratch_;
};

}  // namespace detail

/// Epsilon-SVR trained by SMO with maximal-violating-pair working-set
/// selection.
///
/// The dual is handled over 2n box variables x_t (alpha for t < n, alpha* for
/// t >= n, constraint coefficient a_t = +1/-1). With the cached residual
/// F_i = sum_j beta_j K_ij - y_i, every variable has the optimality value
/// v_t = -F - eps (alpha side) or v_t = -F + eps (alpha* side), and the KKT
/// violation is max_{I_up} v - min_{I_low} v. Each step solves the selected
/// two-variable subproblem exactly and clips to the box, so the dual
/// objective never decreases. The bias comes from free vectors' average v,
/// or the midpoint of the feasible interval when no vector is free.
inline SvrModel train_smo(const Matrix& x, const std::vector<double>& y, const SvrConfig& cfg) {
    const std::size_t n = x.rows;
    if (n < 2 || y.size() != n) throw ShapeMismatch("train_smo: need n >= 2 with matching y");
    for (double v : y)
        if (!std::isfinite(v)) throw NonFiniteInput("train_smo: non-finite target");
    if (!all_finite(x.data)) throw NonFiniteInput("train_smo: non-finite feature");

    const auto autop = resolve_auto(y, cfg);
    const double C = autop.box_constraint;
    const double eps = autop.epsilon;
    if (!(C > 0.0)) throw Error("train_smo: box constraint must be positive");
    if (eps < 0.0) throw Error("train_smo: epsilon must be non-negative");

    detail::KernelProvider kernel(x, cfg.kernel_scale, cfg.cache_limit);

    std::vector<double> xv(2 * n, 0.0);  // alpha / alpha*
    std::vector<double> beta(n, 0.0);
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = -y[i];

    const std::size_t max_iter =
        cfg.max_iterations ? cfg.max_iterations : std::max<std::size_t>(200 * n, 200000);
    const std::size_t no_progress_limit =
        cfg.no_progress_limit ? cfg.no_progress_limit : 10 * n;

    SvrModel model;
    model.kernel_scale = cfg.kernel_scale;
    model.epsilon = eps;
    model.box_constraint = C;
    model.diagnostics.warning = autop.warning;

    double dual = 0.0;
    double violation = 0.0;
    std::size_t iter = 0, stall = 0;

    auto value_of = [&](std::size_t t) {
        return t < n ? -f[t] - eps : -f[t - n] + eps;
    };

    for (; iter < max_iter; ++iter) {
        // maximal violating pair over the 2n index space
        double up_best = -std::numeric_limits<double>::infinity();
        double low_best = std::numeric_limits<double>::infinity();
        std::size_t up_idx = 2 * n, low_idx = 2 * n;
        for (std::size_t i = 0; i < n; ++i) {
            const double va = -f[i] - eps;  // alpha side
            const double vs = -f[i] + eps;  // alpha* side
            if (xv[i] < C && va > up_best) {
                up_best = va;
                up_idx = i;
            }
            if (xv[i] > 0.0 && va < low_best) {
                low_best = va;
                low_idx = i;
            }
            if (xv[n + i] > 0.0 && vs > up_best) {
                up_best = vs;
                up_idx = n + i;
            }
            if (xv[n + i] < C && vs < low_best) {
                low_best = vs;
                low_idx = n + i;
            }
        }
        if (up_idx >= 2 * n || low_idx >= 2 * n) {
            violation = 0.0;
            model.diagnostics.converged = true;
            break;
        }
        violation = up_best - low_best;
        if (violation <= cfg.kkt_tol) {
            model.diagnostics.converged = true;
            break;
        }

        const std::size_t si = up_idx % n, sj = low_idx % n;
        const double ai = up_idx < n ? 1.0 : -1.0;
        const double aj = low_idx < n ? 1.0 : -1.0;

        // box room along the direction (x_i moves by +a_i*t, x_j by -a_j*t)
        double tmax = ai > 0.0 ? C - xv[up_idx] : xv[up_idx];
        tmax = std::min(tmax, aj > 0.0 ? xv[low_idx] : C - xv[low_idx]);
        if (!(tmax > 0.0)) {
            model.diagnostics.warning = "no-progress pair with empty box room";
            break;
        }

        const double eta = si == sj ? 0.0
                                    : kernel.at(si, si) + kernel.at(sj, sj) - 2.0 * kernel.at(si, sj);
        double step = eta > 1e-12 ? violation / eta : tmax;
        step = std::min(step, tmax);
        if (!(step > 0.0)) {
            model.diagnostics.warning = "no-progress step";
            break;
        }

        const double dual_gain = step * violation - 0.5 * eta * step * step;

        xv[up_idx] += ai * step;
        xv[low_idx] -= aj * step;
        // snap to the box to avoid drift
        for (const std::size_t t : {up_idx, low_idx}) {
            if (xv[t] < 1e-14 * C) xv[t] = 0.0;
            if (xv[t] > C * (1.0 - 1e-14)) xv[t] = C;
        }
        beta[si] = xv[si] - xv[n + si];
        beta[sj] = xv[sj] - xv[n + sj];

        if (si != sj) {
            const double* ki = kernel.row(si);
            // copy needed in streaming mode where row() reuses one buffer
            std::vector<double> ki_copy;
            const double* kj;
            if (cfg.cache_limit < n) {
                ki_copy.assign(ki, ki + n);
                ki = ki_copy.data();
                kj = kernel.row(sj);
            } else {
                kj = kernel.row(sj);
            }
            for (std::size_t p = 0; p < n; ++p) f[p] += step * (ki[p] - kj[p]);
        }

        dual += dual_gain;
        if (cfg.track_objective) model.diagnostics.objective_trace.push_back(dual);
        if (dual_gain <= 1e-14 * std::max(1.0, std::abs(dual))) {
            if (++stall >= no_progress_limit) {
                model.diagnostics.warning = "stalled for " + std::to_string(stall) + " iterations";
                break;
            }
        } else {
            stall = 0;
        }
    }

    // exact final quantities
    double bkb = 0.0, yb = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        bkb += beta[i] * (f[i] + y[i]);
        yb += y[i] * beta[i];
        l1 += xv[i] + xv[n + i];
    }
    model.diagnostics.iterations = iter;
    model.diagnostics.final_kkt_violation = std::max(violation, 0.0);
    model.diagnostics.dual_objective = yb - 0.5 * bkb - eps * l1;

    // bias from free vectors, else the midpoint of [low_best, up_best]
    double bias_sum = 0.0;
    std::size_t bias_count = 0;
    for (std::size_t t = 0; t < 2 * n; ++t) {
        if (xv[t] > 0.0 && xv[t] < C) {
            bias_sum += value_of(t);
            ++bias_count;
        }
    }
    if (bias_count > 0) {
        model.bias = bias_sum / static_cast<double>(bias_count);
    } else {
        double up_best = -std::numeric_limits<double>::infinity();
        double low_best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (xv[i] < C) up_best = std::max(up_best, -f[i] - eps);
            if (xv[i] > 0.0) low_best = std::min(low_best, -f[i] - eps);
            if (xv[n + i] > 0.0) up_best = std::max(up_best, -f[i] + eps);
            if (xv[n + i] < C) low_best = std::min(low_best, -f[i] + eps);
        }
        model.bias = 0.5 * (up_best + low_best);
    }

    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(beta[i]) > 1e-12) sv.push_back(i);
    model.support_vectors = Matrix(sv.size(), x.cols);
    model.dual_coefficients.resize(sv.size());
    for (std::size_t r = 0; r < sv.size(); ++r) {
        std::copy_n(x.row(sv[r]), x.cols, model.support_vectors.row(r));
        model.dual_coefficients[r] = beta[sv[r]];
    }
    return model;
}

inline double svr_predict(const SvrModel& model, std::span<const double> x) {
    if (model.support_vectors.rows > 0 && x.size() != model.support_vectors.cols)
        throw ShapeMismatch("svr_predict: dimension mismatch");
    double s = model.bias;
    for (std::size_t r = 0; r < model.support_vectors.rows; ++r)
        s += model.dual_coefficients[r] *
             rbf_kernel(model.support_vectors.row_span(r), x, model.kernel_scale);
    return s;
}

inline std::vector<double> svr_predict_batch(const SvrModel& model, const Matrix& x) {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = svr_predict(model, x.row_span(i));
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json svr_to_json(const SvrModel& model) {
    nlohmann::json svs = nlohmann::json::array();
    for (std::size_t r = 0; r < model.support_vectors.rows; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < model.support_vectors.cols; ++c)
            row.push_back(model.support_vectors(r, c));
        svs.push_back(std::move(row));
    }
    return {{"kernel_scale", model.kernel_scale},
            {"epsilon", model.epsilon},
            {"C", model.box_constraint},
            {"bias", model.bias},
            {"support_vectors", svs},
            {"dual_coefficients", model.dual_coefficients},
            {"diagnostics",
             {{"iterations", model.diagnostics.iterations},
              {"final_kkt_violation", model.diagnostics.final_kkt_violation},
              {"dual_objective", model.diagnostics.dual_objective},
              {"converged", model.diagnostics.converged},
              {"warning", model.diagnostics.warning}}}};
}

inline SvrModel svr_from_json(const nlohmann::json& j) {
    SvrModel model;
    model.kernel_scale = j.at("kernel_scale").get<double>();
    model.epsilon = j.at("epsilon").get<double>();
    model.box_constraint = j.at("C").get<double>();
    model.bias = j.at("bias").get<double>();
    const auto& svs = j.at("support_vectors");
    model.support_vectors = Matrix(svs.size(), svs.empty() ? 0 : svs[0].size());
    for (std::size_t r = 0; r < model.support_vectors.rows; ++r)
        for (std::size_t c = 0; c < model.support_vectors.cols; ++c)
            model.support_vectors(r, c) = svs[r][c].get<double>();
    model.dual_coefficients = j.at("dual_coefficients").get<std::vector<double>>();
    const auto& d = j.at("diagnostics");
    model.diagnostics.iterations = d.at("iterations").get<std::size_t>();
    model.diagnostics.final_kkt_violation = d.at("final_kkt_violation").get<double>();
    model.diagnostics.dual_objective = d.at("dual_objective").get<double>();
    model.diagnostics.converged = d.at("converged").get<bool>();
    model.diagnostics.warning = d.value("warning", std::string{});
    return model;
}

}  // namespace updrs
