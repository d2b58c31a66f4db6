#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "updrs/dataset.hpp"
#include "updrs/rng.hpp"

namespace updrs {

/// Deterministic synthetic telemonitoring dataset in the exact 22-column
/// schema. Subjects follow a staged motor-UPDRS trajectory: a staircase climb
/// through stage 1, a long low-stage-2 plateau with slow drift, and for the
/// most severe subjects a late ramp into stage 3 (the last one touching
/// stage 4). With the default thresholds (15/25/35) the default dataset has
/// exactly 41 rows at or above the second threshold, mirroring the published
/// dataset's minority-group size. Voice features are generated with graded
/// couplings to the motor score so that feature-selection behaviour is
/// non-trivial; total_UPDRS embeds recoverable components of a few voice
/// columns, which keeps it a strong but not sufficient predictor.
struct SynthConfig {
    std::uint64_t seed = 7;
    std::size_t subjects = 42;
    std::size_t rows = 5875;
    // trajectory shape
    double stage1_start_lo = 2.5, stage1_start_hi = 5.5;
    std::size_t stage1_visits_min = 7, stage1_visits_span = 4;  // 7..10
    double plateau_base = 15.45, plateau_slope = 0.5, plateau_jitter = 0.25;
    double plateau_drift = 1.6;
    double noise_sd = 0.10, noise_clamp = 0.30;
    std::size_t ramp_visits = 3;
    std::size_t progressors = 9;      // most severe subjects reach stage 3
    std::size_t mild_subjects = 13;   // least severe subjects never leave stage 1
    double t_start = -4.0, t_end = 212.0;
};

namespace detail {

inline double piecewise(const std::vector<std::pair<double, double>>& anchors, double x) {
    if (x <= anchors.front().first) return anchors.front().second;
    for (std::size_t i = 1; i < anchors.size(); ++i) {
        if (x <= anchors[i].first) {
            const auto& [x0, y0] = anchors[i - 1];
            const auto& [x1, y1] = anchors[i];
            const double f = (x - x0) / (x1 - x0);
            return y0 + f * (y1 - y0);
        }
    }
    return anchors.back().second;
}

inline double round_to(double v, int decimals) {
    const double p = std::pow(10.0, decimals);
    return std::round(v * p) / p;
}

}  // namespace detail

inline RecordTable synth_dataset(const SynthConfig& cfg = {}) {
    RecordTable table;
    Rng rng(cfg.seed);

    const std::size_t base_rows = cfg.rows / cfg.subjects;
    const std::size_t extra = cfg.rows % cfg.subjects;

    // stage-3/4 dwell per progressor; the last one ends in stage 4
    std::vector<std::size_t> upper_rows(cfg.progressors, 0);
    if (cfg.progressors > 0) {
        for (std::size_t p = 0; p < cfg.progressors; ++p)
            upper_rows[p] = p < cfg.progressors / 2 ? 5 : 4;
        if (cfg.progressors == 9) upper_rows = {5, 5, 5, 5, 4, 4, 4, 4, 5};
    }

    for (std::size_t s = 0; s < cfg.subjects; ++s) {
        const std::size_t m = base_rows + (s < extra ? 1 : 0);
        const double sev = cfg.subjects > 1
                               ? static_cast<double>(s) / static_cast<double>(cfg.subjects - 1)
                               : 0.0;
        const bool progressor = s + cfg.progressors >= cfg.subjects;
        const bool mild = s < cfg.mild_subjects;
        const std::size_t prog_idx = progressor ? s + cfg.progressors - cfg.subjects : 0;

        const double subject_id = static_cast<double>(s + 1);
        const double age = std::clamp(
            std::floor(40.0 + 32.0 * sev + static_cast<double>(rng.below(7)) - 3.0), 36.0, 85.0);
        const double sex = (s % 3 == 1 || (s >= cfg.subjects - 8 && s % 2 == 0)) ? 1.0 : 0.0;

        const double m0 = cfg.stage1_start_lo +
                          (cfg.stage1_start_hi - cfg.stage1_start_lo) * sev +
                          rng.uniform(-0.4, 0.4);
        const std::size_t n1 = cfg.stage1_visits_min +
                               static_cast<std::size_t>(rng.below(cfg.stage1_visits_span));
        const double cross = 15.1 + rng.uniform(0.0, 0.35);
        const double span = 15.0 - m0;
        // randomized staircase through stage 1: slow early climb with holds
        // (and sometimes a dip), then a fast final rise to the crossing
        const double f1 = 0.18 + rng.uniform(0.0, 0.10);
        const double f2 = 0.50 + rng.uniform(0.0, 0.14);
        const double f3 = 0.74 + rng.uniform(0.0, 0.10);
        const double l1 = 0.30 + rng.uniform(0.0, 0.20);
        const double l2 = l1 - (rng.below(3) == 0 ? rng.uniform(0.02, 0.12) : -0.03);
        const double l3 = 0.88 + rng.uniform(0.0, 0.06);
        const std::vector<std::pair<double, double>> stair = {
            {0.0, m0},
            {f1, m0 + l1 * span},
            {f2, m0 + l2 * span},
            {f3, m0 + l3 * span},
            {1.00, cross},
        };

        double plateau = cfg.plateau_base + cfg.plateau_slope * sev +
                         rng.uniform(0.0, cfg.plateau_jitter);

        const std::size_t upper = progressor ? upper_rows[prog_idx] : 0;
        const std::size_t ramp_start = progressor ? m - cfg.ramp_visits - upper : m;

        const double dt = (cfg.t_end - cfg.t_start) / static_cast<double>(m - 1);

        // the mild group climbs slowly toward the upper end of stage 1 and
        // stays there, widening the motor spread without entering stage 2
        const double mild_den = cfg.mild_subjects > 1
                                    ? static_cast<double>(cfg.mild_subjects - 1)
                                    : 1.0;
        const double mild_start = 8.5 + 3.0 * static_cast<double>(s) / mild_den +
                                  rng.uniform(-0.3, 0.3);
        const double mild_end = 13.55 + 0.9 * static_cast<double>(s) / mild_den +
                                rng.uniform(0.0, 0.1);

        std::vector<double> motor(m);
        double at_ramp = plateau;
        for (std::size_t i = 0; i < m; ++i) {
            double v;
            if (mild) {
                v = mild_end - (mild_end - mild_start) *
                                   std::exp(-3.2 * static_cast<double>(i) / static_cast<double>(m));
            } else if (i < n1) {
                v = detail::piecewise(stair, static_cast<double>(i) / static_cast<double>(n1 - 1));
            } else if (!progressor || i < ramp_start) {
                const double k = static_cast<double>(i - n1);
                const double drift =
                    cfg.plateau_drift * static_cast<double>(i) / static_cast<double>(m);
                v = plateau + drift - (plateau - cross) * std::exp(-k / 3.0);
                at_ramp = v;
            } else if (i < ramp_start + cfg.ramp_visits) {
                // climb through upper stage 2, ending just below the stage-3
                // threshold so only the dwell rows below count as stage 3/4
                const double f = static_cast<double>(i - ramp_start + 1) /
                                 static_cast<double>(cfg.ramp_visits);
                v = std::min(at_ramp + (24.2 - at_ramp) * std::pow(f, 1.3), 24.2);
            } else {
                const std::size_t k = i - ramp_start - cfg.ramp_visits;
                const bool last_subject = s + 1 == cfg.subjects;
                if (last_subject && i + 2 >= m) {
                    v = i + 1 == m ? 36.3 : 35.6;  // two stage-4 rows
                } else {
                    v = 26.3 + 1.5 * static_cast<double>(k) + rng.uniform(0.0, 0.4);
                    v = std::min(v, 34.2);
                }
            }
            double noise = std::clamp(rng.normal(0.0, cfg.noise_sd), -cfg.noise_clamp,
                                      cfg.noise_clamp);
            if (i >= ramp_start + cfg.ramp_visits && progressor)
                v = std::max(v + noise, 25.35);  // never fall out of stage 3/4
            else
                v = v + noise;
            motor[i] = std::max(v, 0.5);
        }

        for (std::size_t i = 0; i < m; ++i) {
            const double t = cfg.t_start + dt * static_cast<double>(i) + rng.uniform(0.0, 0.4);
            const double mv = motor[i];

            const double zA = std::clamp(rng.normal(), -4.0, 4.0);
            const double zB = std::clamp(rng.normal(), -4.0, 4.0);
            const double zC = std::clamp(rng.normal(), -4.0, 4.0);
            auto zn = [&]() { return std::clamp(rng.normal(), -4.0, 4.0); };
            // heavy-tailed measurement artifacts on the uninformative
            // channels: rare one-sided spikes, kept below the 6-IQR screen
            auto noisy = [&]() {
                if (rng.next_double() < 0.005)
                    return std::clamp(rng.normal(), -1.5, 1.5) + (3.4 + rng.next_double()) * 1.349;
                return std::clamp(rng.normal(), -4.0, 4.0);
            };

            VoiceRecord rec;
            rec.values[kSubject] = subject_id;
            rec.values[kAge] = age;
            rec.values[kSex] = sex;
            rec.values[kTestTime] = detail::round_to(t, 4);
            rec.values[kMotorUpdrs] = detail::round_to(mv, 4);

            const double jitter_pct = std::max(0.0062 + 0.0008 * zA + 1.45e-4 * mv, 1e-6);
            const double jitter_abs = std::max(2.1e-5 + 2.6e-6 * zn() + 4.5e-7 * mv, 1e-9);
            const double jitter_rap = std::max(0.0019 + 2.6e-4 * zn(), 1e-6);
            const double jitter_ppq5 = std::max(0.0023 + 0.0007 * zB + 1.3e-4 * mv, 1e-6);
            const double jitter_ddp = std::max(3.0 * jitter_rap + 2e-6 * zn(), 1e-6);
            const double shimmer = std::max(0.033 + 0.010 * noisy(), 1e-4);
            const double shimmer_db = std::max(0.30 + 0.09 * noisy(), 1e-3);
            const double apq3 = std::max(0.0158 + 0.0046 * noisy(), 1e-4);
            const double apq5 = std::max(0.019 + 0.0055 * zC + 8.0e-4 * mv, 1e-4);
            const double apq11 = std::max(0.0255 + 0.0076 * noisy(), 1e-4);
            const double dda = std::max(3.0 * apq3 + 2e-6 * zn(), 1e-4);
            const double nhr = std::max(0.019 + 0.0042 * zn() + 4.5e-4 * mv, 5e-4);
            const double hnr = std::clamp(21.7 + 2.4 * zn(), 8.0, 36.0);
            const double rpde = std::clamp(0.542 + 0.068 * zn(), 0.04, 0.96);
            const double dfa = std::clamp(0.571 + 0.0125 * zn() + 0.0021 * mv, 0.3, 1.2);
            const double ppe = std::max(0.214 + 0.052 * noisy(), 0.01);

            const double eps = std::clamp(rng.normal(0.0, 0.10), -0.35, 0.35);
            const double total = mv + 7.2 + 0.03 * (age - 60.0) + 0.006 * t +
                                 0.9 * zA + 0.7 * zB + 0.55 * zC +
                                 0.18 * (zA * zA - 1.0) + 0.12 * (zB * zB - 1.0) + eps;
            rec.values[kTotalUpdrs] = detail::round_to(total, 4);

            rec.values[kJitterPct] = detail::round_to(jitter_pct, 6);
            rec.values[kJitterAbs] = detail::round_to(jitter_abs, 9);
            rec.values[kJitterRap] = detail::round_to(jitter_rap, 6);
            rec.values[kJitterPpq5] = detail::round_to(jitter_ppq5, 6);
            rec.values[kJitterDdp] = detail::round_to(jitter_ddp, 6);
            rec.values[kShimmer] = detail::round_to(shimmer, 6);
            rec.values[kShimmerDb] = detail::round_to(shimmer_db, 4);
            rec.values[kShimmerApq3] = detail::round_to(apq3, 6);
            rec.values[kShimmerApq5] = detail::round_to(apq5, 6);
            rec.values[kShimmerApq11] = detail::round_to(apq11, 6);
            rec.values[kShimmerDda] = detail::round_to(dda, 6);
            rec.values[kNhr] = detail::round_to(nhr, 6);
            rec.values[kHnr] = detail::round_to(hnr, 4);
            rec.values[kRpde] = detail::round_to(rpde, 5);
            rec.values[kDfa] = detail::round_to(dfa, 5);
            rec.values[kPpe] = detail::round_to(ppe, 5);

            table.records.push_back(rec);
        }
    }
    return table;
}

}  // namespace updrs
