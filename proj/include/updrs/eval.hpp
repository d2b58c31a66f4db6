#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "updrs/dataset.hpp"
#include "updrs/error.hpp"
#include "updrs/linalg.hpp"
#include "updrs/preprocess.hpp"
#include "updrs/stats.hpp"

namespace updrs {

inline double mse(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw LengthMismatch("mse: length mismatch");
    if (y.empty()) throw EmptyInput("mse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i]) || !std::isfinite(yhat[i]))
            throw NonFiniteInput("mse: non-finite value");
        const double r = y[i] - yhat[i];
        s += r * r;
    }
    return s / static_cast<double>(y.size());
}

inline double rmse(std::span<const double> y, std::span<const double> yhat) {
    return std::sqrt(mse(y, yhat));
}

/// 1 - SSres/SStot with SStot about mean(y). A zero-variance target is an
/// error rather than a silent +-inf.
inline double r_squared(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw LengthMismatch("r_squared: length mismatch");
    if (y.size() < 2) throw EmptyInput("r_squared: need at least 2 values");
    const double ym = mean(y);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - ym) * (y[i] - ym);
    }
    if (ss_tot == 0.0) throw ZeroVariance("r_squared: target has zero variance");
    return 1.0 - ss_res / ss_tot;
}

// ---------------------------------------------------------------------------
// Stage classification

struct ConfusionMatrix {
    std::vector<int> labels;          // stage values, ascending
    std::vector<std::vector<std::size_t>> counts;  // rows true, columns predicted
    std::size_t total = 0;

    std::size_t diagonal() const {
        std::size_t d = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) d += counts[i][i];
        return d;
    }

    double accuracy() const {
        return total == 0 ? 0.0 : static_cast<double>(diagonal()) / static_cast<double>(total);
    }

    std::string to_csv() const {
        std::string out = "true\\pred";
        for (const int l : labels) out += ",stage_" + std::to_string(l);
        out += "\n";
        for (std::size_t r = 0; r < counts.size(); ++r) {
            out += "stage_" + std::to_string(labels[r]);
            for (std::size_t c = 0; c < counts.size(); ++c)
                out += "," + std::to_string(counts[r][c]);
            out += "\n";
        }
        return out;
    }

    nlohmann::json to_json() const {
        return {{"labels", labels}, {"counts", counts}, {"total", total}};
    }
};

/// Bins both score vectors through the stage thresholds and tallies. 3x3 when
/// the config merges stages 3/4, otherwise 4x4.
inline ConfusionMatrix stage_confusion(std::span<const double> y_true,
                                       std::span<const double> y_pred, const StageConfig& cfg) {
    if (y_true.size() != y_pred.size()) throw LengthMismatch("stage_confusion: length mismatch");
    cfg.validate();
    ConfusionMatrix cm;
    const int top = cfg.merge_upper ? 3 : 4;
    for (int s = 1; s <= top; ++s) cm.labels.push_back(s);
    cm.counts.assign(cm.labels.size(), std::vector<std::size_t>(cm.labels.size(), 0));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = group_stage(y_true[i], cfg);
        const int p = group_stage(y_pred[i], cfg);
        ++cm.counts[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(p - 1)];
    }
    cm.total = y_true.size();
    return cm;
}

struct ForecastStageAccuracy {
    double in_range = 0.0;    // forecast stage equals true stage
    double near_range = 0.0;  // off by exactly one stage
};

/// Stage agreement between forecasts and truths using the raw (unmerged)
/// stage labels.
inline ForecastStageAccuracy forecast_stage_accuracy(std::span<const double> forecasts,
                                                     std::span<const double> truths,
                                                     const StageConfig& cfg) {
    if (forecasts.size() != truths.size())
        throw LengthMismatch("forecast_stage_accuracy: length mismatch");
    if (forecasts.empty()) throw EmptyInput("forecast_stage_accuracy: empty input");
    std::size_t in = 0, near = 0;
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        const int fs = stage_of(forecasts[i], cfg).value;
        const int ts = stage_of(truths[i], cfg).value;
        if (fs == ts)
            ++in;
        else if (std::abs(fs - ts) == 1)
            ++near;
    }
    const double n = static_cast<double>(forecasts.size());
    return {static_cast<double>(in) / n, static_cast<double>(near) / n};
}

// ---------------------------------------------------------------------------
// Reports

inline constexpr int kEvalReportSchemaVersion = 1;

struct EvalReport {
    double mse_value = 0.0;
    double rmse_value = 0.0;
    double r_squared_value = 0.0;
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    std::size_t n = 0;
    std::string model_id;
    std::string feature_set_id;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return {{"schema_version", kEvalReportSchemaVersion},
                {"mse", mse_value},
                {"rmse", rmse_value},
                {"r_squared", r_squared_value},
                {"confusion", confusion.to_json()},
                {"accuracy", accuracy},
                {"n", n},
                {"model", model_id},
                {"features", feature_set_id},
                {"seed", seed}};
    }
};

inline EvalReport evaluate_predictions(std::span<const double> y_true,
                                       std::span<const double> y_pred, const StageConfig& cfg,
                                       const std::string& model_id = {},
                                       const std::string& feature_set_id = {},
                                       std::uint64_t seed = 0) {
    EvalReport rep;
    rep.mse_value = mse(y_true, y_pred);
    rep.rmse_value = std::sqrt(rep.mse_value);
    rep.r_squared_value = r_squared(y_true, y_pred);
    rep.confusion = stage_confusion(y_true, y_pred, cfg);
    rep.accuracy = rep.confusion.accuracy();
    rep.n = y_true.size();
    rep.model_id = model_id;
    rep.feature_set_id = feature_set_id;
    rep.seed = seed;
    return rep;
}

inline std::string scatter_csv(std::span<const double> y_true, std::span<const double> y_pred) {
    std::string out = "y_true,y_pred\n";
    for (std::size_t i = 0; i < y_true.size(); ++i)
        out += format_double(y_true[i]) + "," + format_double(y_pred[i]) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Cross-validation harness

/// A trainer maps (features, targets, seed) to a predictor over feature rows.
using Predictor = std::function<double(std::span<const double>)>;
using Trainer = std::function<Predictor(const Matrix&, const std::vector<double>&, std::uint64_t)>;

struct CvOptions {
    std::vector<std::string> feature_columns;
    NormKind normalization = NormKind::minmax;
    StageConfig stages;
    std::optional<SmoteConfig> smote;  // applied to each fold's training part
};

struct CvAggregate {
    double mean_mse = 0.0, sd_mse = 0.0;
    double mean_rmse = 0.0, sd_rmse = 0.0;
    double mean_r2 = 0.0, sd_r2 = 0.0;
    double mean_accuracy = 0.0, sd_accuracy = 0.0;
};

struct CvResult {
    std::vector<EvalReport> reports;  // fold order
    CvAggregate aggregate;
};

/// k-fold cross-validation with preprocessing re-fit inside every fold:
/// the normalizer (and SMOTE when configured) only ever sees the fold's
/// training rows. Fold f trains with seed + f.
inline CvResult cross_validate(const RecordTable& table, std::size_t k, std::uint64_t seed,
                               const CvOptions& options, const Trainer& trainer) {
    std::vector<std::size_t> all(table.n());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto folds = kfold(all, k, seed);

    CvResult result;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        try {
            const auto& [train_idx, val_idx] = folds[f];
            RecordTable train_table = subset(table, train_idx);
            if (options.smote) {
                SmoteConfig sc = *options.smote;
                sc.seed = seed + f;
                const auto extra = smote_table(train_table, options.stages, sc);
                for (const auto& rec : extra) train_table.records.push_back(rec);
            }
            const auto norm = fit_normalizer(train_table, options.feature_columns,
                                             options.normalization);
            const RecordTable train_n = apply_normalizer(norm, train_table);

            std::vector<std::size_t> cols;
            for (const auto& name : options.feature_columns)
                cols.push_back(table.column_index(name));

            Matrix xt(train_n.n(), cols.size());
            std::vector<double> yt(train_n.n());
            for (std::size_t i = 0; i < train_n.n(); ++i) {
                for (std::size_t c = 0; c < cols.size(); ++c)
                    xt(i, c) = train_n.records[i].values[cols[c]];
                yt[i] = train_n.records[i].values[table.target];
            }
            const auto predictor = trainer(xt, yt, seed + f);

            RecordTable val_table = subset(table, val_idx);
            const RecordTable val_n = apply_normalizer(norm, val_table);
            std::vector<double> y_true(val_n.n()), y_pred(val_n.n());
            std::vector<double> row(cols.size());
            for (std::size_t i = 0; i < val_n.n(); ++i) {
                for (std::size_t c = 0; c < cols.size(); ++c)
                    row[c] = val_n.records[i].values[cols[c]];
                y_true[i] = val_n.records[i].values[table.target];
                y_pred[i] = predictor(row);
            }
            auto rep = evaluate_predictions(y_true, y_pred, options.stages, "cv", "", seed + f);
            result.reports.push_back(std::move(rep));
        } catch (const Error& e) {
            throw FoldError("fold " + std::to_string(f) + ": " + e.what());
        }
    }

    auto agg = [&](auto get, double& out_mean, double& out_sd) {
        std::vector<double> vals;
        for (const auto& r : result.reports) vals.push_back(get(r));
        out_mean = mean(vals);
        out_sd = stddev(vals);
    };
    agg([](const EvalReport& r) { return r.mse_value; }, result.aggregate.mean_mse,
        result.aggregate.sd_mse);
    agg([](const EvalReport& r) { return r.rmse_value; }, result.aggregate.mean_rmse,
        result.aggregate.sd_rmse);
    agg([](const EvalReport& r) { return r.r_squared_value; }, result.aggregate.mean_r2,
        result.aggregate.sd_r2);
    agg([](const EvalReport& r) { return r.accuracy; }, result.aggregate.mean_accuracy,
        result.aggregate.sd_accuracy);
    return result;
}

}  // namespace updrs
