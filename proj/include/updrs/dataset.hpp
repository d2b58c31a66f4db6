#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "updrs/error.hpp"
#include "updrs/io.hpp"
#include "updrs/rng.hpp"

namespace updrs {

// Column order of the telemonitoring CSV schema. Loaders validate the header
// against this list byte for byte.
inline constexpr std::size_t kNumColumns = 22;
inline const std::array<std::string, kNumColumns> kColumnNames = {
    "subject#",      "age",           "sex",           "test_time",
    "motor_UPDRS",   "total_UPDRS",   "Jitter(%)",     "Jitter(Abs)",
    "Jitter:RAP",    "Jitter:PPQ5",   "Jitter:DDP",    "Shimmer",
    "Shimmer(dB)",   "Shimmer:APQ3",  "Shimmer:APQ5",  "Shimmer:APQ11",
    "Shimmer:DDA",   "NHR",           "HNR",           "RPDE",
    "DFA",           "PPE"};

enum Col : std::size_t {
    kSubject = 0,
    kAge,
    kSex,
    kTestTime,
    kMotorUpdrs,
    kTotalUpdrs,
    kJitterPct,
    kJitterAbs,
    kJitterRap,
    kJitterPpq5,
    kJitterDdp,
    kShimmer,
    kShimmerDb,
    kShimmerApq3,
    kShimmerApq5,
    kShimmerApq11,
    kShimmerDda,
    kNhr,
    kHnr,
    kRpde,
    kDfa,
    kPpe,
};

inline constexpr std::size_t kFirstVoiceColumn = kJitterPct;

/// One dataset row. Values are stored by column index; named accessors cover
/// the fields used directly in code. subject# is integral in source data but
/// kept as double so interpolated (synthetic) rows stay representable.
struct VoiceRecord {
    std::array<double, kNumColumns> values{};
    bool synthetic = false;

    double subject_id() const { return values[kSubject]; }
    double age() const { return values[kAge]; }
    double sex() const { return values[kSex]; }
    double test_time() const { return values[kTestTime]; }
    double motor_updrs() const { return values[kMotorUpdrs]; }
    double total_updrs() const { return values[kTotalUpdrs]; }
};

struct RecordTable {
    std::vector<VoiceRecord> records;
    std::vector<std::string> column_names{kColumnNames.begin(), kColumnNames.end()};
    std::size_t target = kMotorUpdrs;

    std::size_t n() const { return records.size(); }

    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < column_names.size(); ++i)
            if (column_names[i] == name) return i;
        throw UnknownColumn("unknown column: " + name);
    }

    std::vector<double> column(std::size_t col) const {
        std::vector<double> out(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) out[i] = records[i].values[col];
        return out;
    }

    std::size_t distinct_subjects() const {
        std::set<double> ids;
        for (const auto& r : records) ids.insert(r.subject_id());
        return ids.size();
    }
};

/// Ascending motor-UPDRS thresholds separating stages 1-4. merge_upper folds
/// stage 4 into stage 3 wherever rows are grouped by stage (splits, SMOTE,
/// confusion matrices); stage_of itself always reports the raw 1-4 label.
struct StageConfig {
    double t1 = 15.0, t2 = 25.0, t3 = 35.0;
    bool merge_upper = true;

    void validate() const {
        if (!(t1 > 0.0 && t1 < t2 && t2 < t3) || !std::isfinite(t1) || !std::isfinite(t2) ||
            !std::isfinite(t3))
            throw InvalidStageConfig("stage thresholds must satisfy 0 < t1 < t2 < t3");
    }
};

struct StageLabel {
    int value = 1;
};

/// Left-closed upper bins: stage 1 below t1, stage 2 in [t1,t2), stage 3 in
/// [t2,t3), stage 4 at or above t3.
inline StageLabel stage_of(double motor_updrs, const StageConfig& cfg) {
    cfg.validate();
    if (!std::isfinite(motor_updrs)) throw NonFiniteInput("stage_of: non-finite motor_updrs");
    if (motor_updrs < cfg.t1) return {1};
    if (motor_updrs < cfg.t2) return {2};
    if (motor_updrs < cfg.t3) return {3};
    return {4};
}

/// Stage label with the optional 3/4 merge applied; used as the grouping key
/// for stratification, SMOTE minority selection and classification.
inline int group_stage(double motor_updrs, const StageConfig& cfg) {
    const int s = stage_of(motor_updrs, cfg).value;
    return (cfg.merge_upper && s == 4) ? 3 : s;
}

inline std::vector<int> group_labels(const RecordTable& table, const StageConfig& cfg) {
    std::vector<int> out(table.n());
    for (std::size_t i = 0; i < table.n(); ++i)
        out[i] = group_stage(table.records[i].motor_updrs(), cfg);
    return out;
}

struct SplitSpec {
    std::uint64_t seed = 0;
    double ratio = 0.7;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;

    nlohmann::json to_json() const {
        return {{"seed", seed},
                {"ratio", ratio},
                {"train_indices", train_indices},
                {"test_indices", test_indices}};
    }

    static SplitSpec from_json(const nlohmann::json& j) {
        SplitSpec s;
        s.seed = j.at("seed").get<std::uint64_t>();
        s.ratio = j.at("ratio").get<double>();
        s.train_indices = j.at("train_indices").get<std::vector<std::size_t>>();
        s.test_indices = j.at("test_indices").get<std::vector<std::size_t>>();
        return s;
    }
};

// ---------------------------------------------------------------------------
// CSV I/O

namespace detail {
inline std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}
}  // namespace detail

/// Parses the telemonitoring CSV. The header must match the 22-column schema
/// exactly; every cell must parse as a finite number.
inline RecordTable load_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw HeaderMismatch("empty file: " + path);
    {
        const auto header = split_csv_line(line);
        bool ok = header.size() >= kNumColumns;
        if (ok)
            for (std::size_t i = 0; i < kNumColumns; ++i)
                if (header[i] != kColumnNames[i]) ok = false;
        // tolerate a trailing synthetic-flag column written by this toolkit
        if (ok && header.size() > kNumColumns &&
            !(header.size() == kNumColumns + 1 && header[kNumColumns] == "synthetic"))
            ok = false;
        if (!ok)
            throw HeaderMismatch("header mismatch: expected [" +
                                 detail::join({kColumnNames.begin(), kColumnNames.end()}, ',') +
                                 "] found [" + line + "]");
    }

    RecordTable table;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != kNumColumns && cells.size() != kNumColumns + 1)
            throw RowParseError("row " + std::to_string(row) + ": expected " +
                                std::to_string(kNumColumns) + " columns, found " +
                                std::to_string(cells.size()));
        VoiceRecord rec;
        for (std::size_t c = 0; c < kNumColumns; ++c) {
            const auto v = parse_double(cells[c]);
            if (!v)
                throw RowParseError("row " + std::to_string(row) + ", column " + kColumnNames[c] +
                                    ": cannot parse '" + cells[c] + "'");
            if (!std::isfinite(*v))
                throw NonFiniteValue("row " + std::to_string(row) + ", column " + kColumnNames[c] +
                                     ": non-finite value '" + cells[c] + "'");
            rec.values[c] = *v;
        }
        if (cells.size() == kNumColumns + 1) rec.synthetic = parse_double(cells[kNumColumns]).value_or(0.0) != 0.0;
        table.records.push_back(rec);
    }
    return table;
}

inline std::string table_to_csv(const RecordTable& table, bool with_synthetic_flag = false) {
    std::string out = detail::join({table.column_names.begin(), table.column_names.end()}, ',');
    if (with_synthetic_flag) out += ",synthetic";
    out += '\n';
    for (const auto& rec : table.records) {
        for (std::size_t c = 0; c < kNumColumns; ++c) {
            if (c) out += ',';
            out += format_double(rec.values[c]);
        }
        if (with_synthetic_flag) out += rec.synthetic ? ",1" : ",0";
        out += '\n';
    }
    return out;
}

inline void write_csv(const RecordTable& table, const std::string& path,
                      bool with_synthetic_flag = false) {
    write_file_atomic(path, table_to_csv(table, with_synthetic_flag));
}

/// Sanity screen for conditions that are suspicious but not fatal: negative
/// test_time, out-of-range RPDE/DFA, negative perturbation measures,
/// fractional subject ids on non-synthetic rows.
inline std::vector<std::string> validate(const RecordTable& table) {
    std::vector<std::string> warnings;
    auto warn = [&](std::size_t row, const std::string& msg) {
        if (warnings.size() < 200)
            warnings.push_back("row " + std::to_string(row) + ": " + msg);
    };
    for (std::size_t i = 0; i < table.n(); ++i) {
        const auto& r = table.records[i];
        if (r.test_time() < 0.0) warn(i, "negative test_time (pre-recruitment row)");
        if (r.values[kRpde] < 0.0 || r.values[kRpde] > 1.0) warn(i, "RPDE outside [0,1]");
        if (r.values[kDfa] <= 0.0 || r.values[kDfa] >= 1.5) warn(i, "DFA outside (0,1.5)");
        if (r.motor_updrs() < 0.0) warn(i, "negative motor_UPDRS");
        if (r.total_updrs() < 0.0) warn(i, "negative total_UPDRS");
        for (std::size_t c = kFirstVoiceColumn; c < kNumColumns; ++c)
            if (c != kHnr && c != kDfa && c != kRpde && r.values[c] < 0.0) {
                warn(i, std::string(kColumnNames[c]) + " is negative");
                break;
            }
        if (!r.synthetic && r.subject_id() != std::floor(r.subject_id()))
            warn(i, "fractional subject# on a non-synthetic row");
    }
    return warnings;
}

// ---------------------------------------------------------------------------
// Splits

namespace detail {

/// Largest-remainder quotas: each group contributes floor(ratio*n_g), and the
/// leftover seats up to round(ratio*N) go to the largest fractional parts.
inline std::vector<std::size_t> largest_remainder_quotas(const std::vector<std::size_t>& sizes,
                                                         double ratio) {
    std::size_t total = 0;
    for (auto s : sizes) total += s;
    const auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(total)));
    std::vector<std::size_t> quota(sizes.size());
    std::vector<std::pair<double, std::size_t>> remainders;  // (-remainder, group)
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        const double q = ratio * static_cast<double>(sizes[g]);
        quota[g] = static_cast<std::size_t>(std::floor(q));
        assigned += quota[g];
        remainders.emplace_back(-(q - std::floor(q)), g);
    }
    std::sort(remainders.begin(), remainders.end());
    std::size_t extra = target > assigned ? target - assigned : 0;
    for (std::size_t pass = 0; extra > 0; ++pass) {
        for (const auto& [negrem, g] : remainders) {
            if (extra == 0) break;
            if (quota[g] < sizes[g]) {
                ++quota[g];
                --extra;
            }
        }
        if (pass > sizes.size()) break;
    }
    return quota;
}

}  // namespace detail

/// Stratified 70/30-style split. Rows are grouped by stage label (or by
/// subject when group_by_subject is set), each group is shuffled with the
/// seeded PRNG, and per-group train counts follow the largest-remainder rule
/// so the global train size equals round(ratio*N).
inline SplitSpec stratified_split(const RecordTable& table, const StageConfig& cfg, double ratio,
                                  std::uint64_t seed, bool group_by_subject = false) {
    cfg.validate();
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error("ratio must be in (0,1)");
    if (table.n() == 0) throw EmptyTable("stratified_split: empty table");

    std::map<double, std::vector<std::size_t>> groups;
    if (group_by_subject) {
        for (std::size_t i = 0; i < table.n(); ++i)
            groups[table.records[i].subject_id()].push_back(i);
    } else {
        for (std::size_t i = 0; i < table.n(); ++i)
            groups[static_cast<double>(group_stage(table.records[i].motor_updrs(), cfg))].push_back(i);
        const int top = cfg.merge_upper ? 3 : 4;
        for (int s = 1; s <= top; ++s)
            if (!groups.count(static_cast<double>(s)))
                throw EmptyGroup("stage " + std::to_string(s) + " has zero members");
    }

    std::vector<std::size_t> sizes;
    for (const auto& [key, idx] : groups) sizes.push_back(idx.size());
    const auto quotas = detail::largest_remainder_quotas(sizes, ratio);

    SplitSpec spec;
    spec.seed = seed;
    spec.ratio = ratio;
    Rng rng(seed);
    std::size_t g = 0;
    for (auto& [key, idx] : groups) {
        rng.shuffle(idx);
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < quotas[g] ? spec.train_indices : spec.test_indices).push_back(idx[i]);
        ++g;
    }
    std::sort(spec.train_indices.begin(), spec.train_indices.end());
    std::sort(spec.test_indices.begin(), spec.test_indices.end());
    return spec;
}

/// k folds over the given indices: validation parts are disjoint, cover all
/// indices, and differ in size by at most one. Deterministic per seed.
inline std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold(
    std::vector<std::size_t> indices, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error("kfold: k must be at least 2");
    if (k > indices.size())
        throw KTooLarge("kfold: k=" + std::to_string(k) + " exceeds " +
                        std::to_string(indices.size()) + " indices");
    Rng rng(seed);
    rng.shuffle(indices);
    const std::size_t n = indices.size();
    const std::size_t base = n / k, rem = n % k;
    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds(k);
    std::size_t pos = 0;
    std::vector<std::pair<std::size_t, std::size_t>> ranges(k);
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = base + (f < rem ? 1 : 0);
        ranges[f] = {pos, pos + len};
        pos += len;
    }
    for (std::size_t f = 0; f < k; ++f) {
        auto& [train, val] = folds[f];
        for (std::size_t i = 0; i < n; ++i)
            (i >= ranges[f].first && i < ranges[f].second ? val : train).push_back(indices[i]);
        std::sort(train.begin(), train.end());
        std::sort(val.begin(), val.end());
    }
    return folds;
}

inline RecordTable subset(const RecordTable& table, const std::vector<std::size_t>& indices) {
    RecordTable out;
    out.column_names = table.column_names;
    out.target = table.target;
    out.records.reserve(indices.size());
    for (auto i : indices) out.records.push_back(table.records.at(i));
    return out;
}

}  // namespace updrs
