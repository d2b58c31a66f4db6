#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "updrs/dataset.hpp"
#include "updrs/error.hpp"
#include "updrs/rng.hpp"
#include "updrs/stats.hpp"

namespace updrs {

enum class NormKind { minmax, zscore };

inline std::string to_string(NormKind k) { return k == NormKind::minmax ? "minmax" : "zscore"; }

inline NormKind norm_kind_from_string(const std::string& s) {
    if (s == "minmax") return NormKind::minmax;
    if (s == "zscore") return NormKind::zscore;
    throw Error("unknown normalization kind: " + s);
}

/// Per-column statistics: (min,max) for minmax, (mean,sd) for zscore.
/// Degenerate columns (max==min or sd==0) map every value to 0.
struct ColumnStats {
    double a = 0.0, b = 0.0;
    bool degenerate = false;
};

struct NormalizerParams {
    NormKind kind = NormKind::minmax;
    std::vector<std::pair<std::string, ColumnStats>> columns;  // keyed by column name, fit order
    std::size_t fitted_on = 0;

    const ColumnStats* find(const std::string& name) const {
        for (const auto& [n, s] : columns)
            if (n == name) return &s;
        return nullptr;
    }

    nlohmann::json to_json() const {
        nlohmann::json cols = nlohmann::json::object();
        for (const auto& [name, s] : columns) {
            if (kind == NormKind::minmax)
                cols[name] = {{"min", s.a}, {"max", s.b}};
            else
                cols[name] = {{"mean", s.a}, {"sd", s.b}};
        }
        return {{"kind", to_string(kind)}, {"columns", cols}, {"fitted_on", fitted_on}};
    }

    static NormalizerParams from_json(const nlohmann::json& j) {
        NormalizerParams p;
        p.kind = norm_kind_from_string(j.at("kind").get<std::string>());
        p.fitted_on = j.value("fitted_on", std::size_t{0});
        for (const auto& [name, s] : j.at("columns").items()) {
            ColumnStats cs;
            if (p.kind == NormKind::minmax) {
                cs.a = s.at("min").get<double>();
                cs.b = s.at("max").get<double>();
                cs.degenerate = cs.b == cs.a;
            } else {
                cs.a = s.at("mean").get<double>();
                cs.b = s.at("sd").get<double>();
                cs.degenerate = cs.b == 0.0;
            }
            p.columns.emplace_back(name, cs);
        }
        return p;
    }
};

inline double normalize_value(const ColumnStats& s, NormKind kind, double x) {
    if (s.degenerate) return 0.0;
    if (kind == NormKind::minmax) return (x - s.a) / (s.b - s.a);
    return (x - s.a) / s.b;
}

inline double denormalize_value(const ColumnStats& s, NormKind kind, double z) {
    if (s.degenerate) return s.a;
    if (kind == NormKind::minmax) return s.a + z * (s.b - s.a);
    return s.a + z * s.b;
}

/// Fit column statistics over the given rows (all rows when row_indices is
/// empty). Statistics never see rows outside the provided index set, which is
/// how train-only fitting is expressed.
inline NormalizerParams fit_normalizer(const RecordTable& table,
                                       const std::vector<std::string>& columns, NormKind kind,
                                       const std::vector<std::size_t>& row_indices = {}) {
    if (table.n() == 0) throw EmptyTable("fit_normalizer: empty table");
    std::vector<std::size_t> rows = row_indices;
    if (rows.empty()) {
        rows.resize(table.n());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    }
    NormalizerParams params;
    params.kind = kind;
    params.fitted_on = rows.size();
    for (const auto& name : columns) {
        const std::size_t col = table.column_index(name);
        std::vector<double> vals(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) vals[i] = table.records[rows[i]].values[col];
        ColumnStats s;
        if (kind == NormKind::minmax) {
            s.a = *std::min_element(vals.begin(), vals.end());
            s.b = *std::max_element(vals.begin(), vals.end());
            s.degenerate = s.b == s.a;
        } else {
            s.a = mean(vals);
            s.b = stddev(vals);
            s.degenerate = s.b == 0.0;
        }
        params.columns.emplace_back(name, s);
    }
    return params;
}

/// Transform the fitted columns in place on a copy of the table. Values
/// outside the fitted range are not clipped.
inline RecordTable apply_normalizer(const NormalizerParams& params, const RecordTable& table) {
    RecordTable out = table;
    for (const auto& [name, s] : params.columns) {
        const std::size_t col = out.column_index(name);
        for (auto& rec : out.records) rec.values[col] = normalize_value(s, params.kind, rec.values[col]);
    }
    return out;
}

inline RecordTable invert_normalizer(const NormalizerParams& params, const RecordTable& table) {
    RecordTable out = table;
    for (const auto& [name, s] : params.columns) {
        const std::size_t col = out.column_index(name);
        for (auto& rec : out.records) rec.values[col] = denormalize_value(s, params.kind, rec.values[col]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Row screening

struct RemovedRow {
    std::size_t index = 0;
    std::string reason;
};

struct RemovedReport {
    std::vector<RemovedRow> rows;
};

/// Drops rows with non-finite fields, then rows where any voice feature lies
/// more than iqr_multiplier interquartile ranges outside [Q1, Q3] of its
/// column. Columns with zero IQR are exempt from the outlier rule.
inline std::pair<RecordTable, RemovedReport> remove_invalid(const RecordTable& table,
                                                            double iqr_multiplier = 6.0) {
    RemovedReport report;
    std::vector<bool> drop(table.n(), false);

    for (std::size_t i = 0; i < table.n(); ++i) {
        for (std::size_t c = 0; c < kNumColumns; ++c) {
            if (!std::isfinite(table.records[i].values[c])) {
                drop[i] = true;
                report.rows.push_back({i, "non-finite"});
                break;
            }
        }
    }

    for (std::size_t c = kFirstVoiceColumn; c < kNumColumns; ++c) {
        std::vector<double> vals;
        vals.reserve(table.n());
        for (std::size_t i = 0; i < table.n(); ++i)
            if (!drop[i]) vals.push_back(table.records[i].values[c]);
        if (vals.size() < 4) continue;
        const double q1 = quantile(vals, 0.25), q3 = quantile(vals, 0.75);
        const double range = q3 - q1;
        if (range <= 0.0) continue;  // degenerate IQR disables the rule for this column
        const double lo = q1 - iqr_multiplier * range, hi = q3 + iqr_multiplier * range;
        for (std::size_t i = 0; i < table.n(); ++i) {
            if (drop[i]) continue;
            const double v = table.records[i].values[c];
            if (v < lo || v > hi) {
                drop[i] = true;
                report.rows.push_back({i, "outlier(" + kColumnNames[c] + ")"});
            }
        }
    }

    std::sort(report.rows.begin(), report.rows.end(),
              [](const RemovedRow& a, const RemovedRow& b) { return a.index < b.index; });
    RecordTable out;
    out.column_names = table.column_names;
    out.target = table.target;
    for (std::size_t i = 0; i < table.n(); ++i)
        if (!drop[i]) out.records.push_back(table.records[i]);
    return {out, report};
}

// ---------------------------------------------------------------------------
// SMOTE

enum class SmoteScope { train_only, whole_dataset };

struct SmoteConfig {
    std::size_t k = 5;
    std::size_t target_count = 0;
    std::uint64_t seed = 0;
    SmoteScope scope = SmoteScope::train_only;
};

/// Synthetic minority oversampling: each synthetic vector is
/// x + u * (nn - x) for a seeded-PRNG-chosen minority row x, one of its k
/// nearest minority neighbours nn, and u uniform in [0,1). Neighbour distance
/// is Euclidean in min-max-normalized coordinates; interpolation happens on
/// the raw coordinates, so every synthetic coordinate stays inside its
/// parent-neighbour segment.
inline std::vector<std::vector<double>> smote(const std::vector<std::vector<double>>& minority,
                                              const SmoteConfig& cfg) {
    const std::size_t n = minority.size();
    if (n < 2) throw TooFewMinoritySamples("smote: need at least 2 minority rows");
    if (cfg.k < 1 || cfg.k >= n)
        throw KTooLarge("smote: k must satisfy 1 <= k < minority count");
    if (cfg.target_count < n)
        throw Error("smote: target_count below current minority count");
    const std::size_t want = cfg.target_count - n;
    if (want == 0) return {};

    const std::size_t dim = minority.front().size();
    for (const auto& row : minority)
        if (row.size() != dim) throw ShapeMismatch("smote: ragged minority rows");

    // min-max scale per coordinate for the distance metric only
    std::vector<double> lo(dim), range(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        double mn = minority[0][d], mx = minority[0][d];
        for (const auto& row : minority) {
            mn = std::min(mn, row[d]);
            mx = std::max(mx, row[d]);
        }
        lo[d] = mn;
        range[d] = mx > mn ? mx - mn : 0.0;
    }
    auto scaled = [&](std::size_t i, std::size_t d) {
        return range[d] > 0.0 ? (minority[i][d] - lo[d]) / range[d] : 0.0;
    };

    // k nearest neighbours per row, ties broken by index
    std::vector<std::vector<std::size_t>> neighbors(n);
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < n; ++i) {
        cand.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = scaled(i, d) - scaled(j, d);
                d2 += diff * diff;
            }
            cand.emplace_back(d2, j);
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(cfg.k),
                          cand.end());
        neighbors[i].reserve(cfg.k);
        for (std::size_t t = 0; t < cfg.k; ++t) neighbors[i].push_back(cand[t].second);
    }

    Rng rng(cfg.seed);
    std::vector<std::vector<double>> synthetic;
    synthetic.reserve(want);
    for (std::size_t s = 0; s < want; ++s) {
        const std::size_t i = static_cast<std::size_t>(rng.below(n));
        const std::size_t nn = neighbors[i][static_cast<std::size_t>(rng.below(cfg.k))];
        const double u = rng.next_double();
        std::vector<double> row(dim);
        for (std::size_t d = 0; d < dim; ++d)
            row[d] = minority[i][d] + u * (minority[nn][d] - minority[i][d]);
        synthetic.push_back(std::move(row));
    }
    return synthetic;
}

/// Applies SMOTE to the minority stage group of a table and returns the rows
/// to append (synthetic flag set). target_count counts the whole minority
/// group after oversampling.
inline std::vector<VoiceRecord> smote_table(const RecordTable& table, const StageConfig& stages,
                                            const SmoteConfig& cfg) {
    const auto labels = group_labels(table, stages);
    std::map<int, std::size_t> counts;
    for (int s : labels) ++counts[s];
    int minority_stage = labels.empty() ? 1 : labels.front();
    std::size_t minority_count = table.n() + 1;
    for (const auto& [s, c] : counts)
        if (c < minority_count) {
            minority_count = c;
            minority_stage = s;
        }

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < table.n(); ++i)
        if (labels[i] == minority_stage)
            rows.emplace_back(table.records[i].values.begin(), table.records[i].values.end());

    SmoteConfig eff = cfg;
    if (eff.target_count < rows.size()) eff.target_count = rows.size();
    const auto synth = smote(rows, eff);

    std::vector<VoiceRecord> out;
    out.reserve(synth.size());
    for (const auto& v : synth) {
        VoiceRecord rec;
        std::copy(v.begin(), v.end(), rec.values.begin());
        rec.synthetic = true;
        out.push_back(rec);
    }
    return out;
}

}  // namespace updrs
