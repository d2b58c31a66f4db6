#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "updrs/dataset.hpp"
#include "updrs/error.hpp"
#include "updrs/linalg.hpp"
#include "updrs/rng.hpp"
#include "updrs/stats.hpp"

namespace updrs {

struct FeatureRanking {
    struct Entry {
        std::string feature;
        double weight = 0.0;
    };
    std::vector<Entry> entries;  // descending weight, ties by ascending column index
    std::size_t k = 0;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;

    std::string to_csv() const {
        std::string out = "rank,feature,weight\n";
        for (std::size_t i = 0; i < entries.size(); ++i)
            out += std::to_string(i + 1) + "," + entries[i].feature + "," +
                   format_double(entries[i].weight) + "\n";
        return out;
    }
};

/// Multi-class Relief-F.
///
/// For each sampled instance the k nearest hits (same class) and k nearest
/// misses per other class are found; feature f is penalised by hit
/// differences and rewarded by prior-weighted miss differences:
///
///   W[f] += sum_c P(c)/(1-P(own)) * sum_miss diff(f,x,miss) / (m*k)
///         - sum_hit diff(f,x,hit) / (m*k)
///
/// diff is the per-feature range-normalized absolute difference, and the
/// neighbour metric is the Euclidean norm of those diffs, which makes the
/// weights invariant under affine rescaling of any column. Neighbour ties
/// break on the lower row index. sample_count == 0 samples every instance in
/// row order; otherwise a seeded shuffle picks the sample.
inline FeatureRanking relief_f(const Matrix& x, const std::vector<int>& labels,
                               const std::vector<std::string>& feature_names, std::size_t k,
                               std::size_t sample_count, std::uint64_t seed) {
    const std::size_t n = x.rows, d = x.cols;
    if (labels.size() != n) throw ShapeMismatch("relief_f: labels/rows mismatch");
    if (feature_names.size() != d) throw ShapeMismatch("relief_f: names/cols mismatch");
    if (n == 0) throw EmptyTable("relief_f: empty matrix");

    std::map<int, std::size_t> class_counts;
    for (int c : labels) ++class_counts[c];
    if (class_counts.size() < 2) throw SingleClass("relief_f: need at least 2 classes");
    std::size_t smallest = n;
    for (const auto& [c, cnt] : class_counts) smallest = std::min(smallest, cnt);
    if (k < 1 || k >= smallest)
        throw KTooLarge("relief_f: k must satisfy 1 <= k < smallest class size");

    std::vector<double> range(d);
    for (std::size_t f = 0; f < d; ++f) {
        double mn = x(0, f), mx = x(0, f);
        for (std::size_t i = 1; i < n; ++i) {
            mn = std::min(mn, x(i, f));
            mx = std::max(mx, x(i, f));
        }
        range[f] = mx > mn ? mx - mn : 0.0;
    }
    auto diff = [&](std::size_t f, std::size_t a, std::size_t b) {
        return range[f] > 0.0 ? std::abs(x(a, f) - x(b, f)) / range[f] : 0.0;
    };

    std::vector<std::size_t> sample;
    if (sample_count == 0 || sample_count >= n) {
        sample.resize(n);
        for (std::size_t i = 0; i < n; ++i) sample[i] = i;
    } else {
        sample.resize(n);
        for (std::size_t i = 0; i < n; ++i) sample[i] = i;
        Rng rng(seed);
        rng.shuffle(sample);
        sample.resize(sample_count);
    }
    const double m = static_cast<double>(sample.size());

    std::map<int, double> prior;
    for (const auto& [c, cnt] : class_counts)
        prior[c] = static_cast<double>(cnt) / static_cast<double>(n);

    std::vector<double> weights(d, 0.0);
    std::map<int, std::vector<std::pair<double, std::size_t>>> per_class;
    for (const std::size_t i : sample) {
        per_class.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (std::size_t f = 0; f < d; ++f) {
                const double v = diff(f, i, j);
                d2 += v * v;
            }
            per_class[labels[j]].emplace_back(d2, j);
        }
        const int own = labels[i];
        for (auto& [cls, cand] : per_class) {
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k),
                              cand.end());
            const double scale = cls == own
                                     ? -1.0 / (m * static_cast<double>(k))
                                     : prior[cls] / (1.0 - prior[own]) / (m * static_cast<double>(k));
            for (std::size_t t = 0; t < k; ++t) {
                const std::size_t j = cand[t].second;
                for (std::size_t f = 0; f < d; ++f) weights[f] += scale * diff(f, i, j);
            }
        }
    }

    FeatureRanking ranking;
    ranking.k = k;
    ranking.sample_count = sample.size();
    ranking.seed = seed;
    std::vector<std::size_t> order(d);
    for (std::size_t f = 0; f < d; ++f) order[f] = f;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (weights[a] != weights[b]) return weights[a] > weights[b];
        return a < b;
    });
    for (const std::size_t f : order) ranking.entries.push_back({feature_names[f], weights[f]});
    return ranking;
}

// ---------------------------------------------------------------------------
// Ridge-damped ordinary least squares (the SFS inner estimator)

/// Fits y ~ X * beta + intercept with an L2 penalty on the non-intercept
/// coefficients. Returns d+1 coefficients, intercept last.
inline std::vector<double> ols_ridge(const Matrix& x, const std::vector<double>& y,
                                     double lambda) {
    const std::size_t n = x.rows, d = x.cols;
    if (y.size() != n) throw ShapeMismatch("ols_ridge: X/y mismatch");
    Matrix gram(d + 1, d + 1);
    std::vector<double> rhs(d + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row(i);
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = a; b < d; ++b) gram(a, b) += xi[a] * xi[b];
            gram(a, d) += xi[a];
            rhs[a] += xi[a] * y[i];
        }
        rhs[d] += y[i];
    }
    gram(d, d) = static_cast<double>(n);
    for (std::size_t a = 0; a < d; ++a) {
        gram(a, a) += lambda;
        for (std::size_t b = a + 1; b < d; ++b) gram(b, a) = gram(a, b);
        gram(d, a) = gram(a, d);
    }
    return solve_linear(std::move(gram), std::move(rhs));
}

inline double ols_predict(const std::vector<double>& coefs, const double* row) {
    double v = coefs.back();
    for (std::size_t f = 0; f + 1 < coefs.size(); ++f) v += coefs[f] * row[f];
    return v;
}

struct SfsConfig {
    std::size_t max_features = 10;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    double tol_improve = 1e-6;
    double ridge = 1e-8;
};

struct SfsTrace {
    struct Step {
        std::string feature;
        double cv_mse = 0.0;
    };
    std::vector<Step> steps;
    std::vector<std::string> final_subset;

    std::string to_csv() const {
        std::string out = "step,feature,cv_mse\n";
        for (std::size_t i = 0; i < steps.size(); ++i)
            out += std::to_string(i + 1) + "," + steps[i].feature + "," +
                   format_double(steps[i].cv_mse) + "\n";
        return out;
    }
};

/// Greedy sequential forward selection: at each step the candidate whose
/// addition minimises k-fold CV mean MSE of the inner OLS estimator is added.
/// Stops at max_features or when the best candidate improves CV MSE by no
/// more than tol_improve. Folds are drawn once up front; candidate ties break
/// on the lower column index.
inline SfsTrace sfs(const Matrix& x, const std::vector<double>& y,
                    const std::vector<std::string>& candidate_names, const SfsConfig& cfg) {
    const std::size_t n = x.rows, d = x.cols;
    if (candidate_names.size() != d) throw ShapeMismatch("sfs: names/cols mismatch");
    if (d == 0) throw EmptyCandidates("sfs: no candidate features");
    if (y.size() != n) throw ShapeMismatch("sfs: X/y mismatch");
    if (variance(y) == 0.0) throw DegenerateTarget("sfs: target has zero variance");

    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    const auto folds = kfold(all, cfg.folds, cfg.seed);

    auto cv_mse = [&](const std::vector<std::size_t>& features) {
        double total = 0.0;
        for (const auto& [train_idx, val_idx] : folds) {
            Matrix xt(train_idx.size(), features.size());
            std::vector<double> yt(train_idx.size());
            for (std::size_t i = 0; i < train_idx.size(); ++i) {
                for (std::size_t f = 0; f < features.size(); ++f)
                    xt(i, f) = x(train_idx[i], features[f]);
                yt[i] = y[train_idx[i]];
            }
            const auto coefs = ols_ridge(xt, yt, cfg.ridge);
            double se = 0.0;
            std::vector<double> row(features.size());
            for (const std::size_t i : val_idx) {
                for (std::size_t f = 0; f < features.size(); ++f) row[f] = x(i, features[f]);
                const double r = ols_predict(coefs, row.data()) - y[i];
                se += r * r;
            }
            total += se / static_cast<double>(val_idx.size());
        }
        return total / static_cast<double>(folds.size());
    };

    SfsTrace trace;
    std::vector<std::size_t> selected;
    std::vector<bool> used(d, false);
    double best_so_far = std::numeric_limits<double>::infinity();
    const std::size_t limit = std::min(cfg.max_features, d);

    while (selected.size() < limit) {
        double best_mse = std::numeric_limits<double>::infinity();
        std::size_t best_f = d;
        for (std::size_t f = 0; f < d; ++f) {
            if (used[f]) continue;
            auto trial = selected;
            trial.push_back(f);
            const double mse = cv_mse(trial);
            if (mse < best_mse) {  // strict: ties keep the lower column index
                best_mse = mse;
                best_f = f;
            }
        }
        if (best_f == d) break;
        if (std::isfinite(best_so_far) && best_so_far - best_mse <= cfg.tol_improve) break;
        selected.push_back(best_f);
        used[best_f] = true;
        best_so_far = best_mse;
        trace.steps.push_back({candidate_names[best_f], best_mse});
    }
    for (const std::size_t f : selected) trace.final_subset.push_back(candidate_names[f]);
    return trace;
}

}  // namespace updrs
