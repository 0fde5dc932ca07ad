#pragma once

// Shared fixtures: hand-built subject records and the two worked datasets
// (the six-subject follow-up figure and the six-row MI table) used across
// suites.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tte/rng.hpp"
#include "tte/strategy.hpp"
#include "tte/trial_data.hpp"

namespace fixtures {

using namespace tte;

// A record with constant treatment, an optional event month, and an optional
// censoring month (first censored index = censor_month - 1).
inline SubjectRecord make_subject(std::string id, TreatCode arm, int k,
                                  std::optional<int> event_month = std::nullopt,
                                  std::optional<int> censor_month = std::nullopt,
                                  std::vector<double> w = {}) {
    SubjectRecord rec;
    rec.id = std::move(id);
    rec.w = std::move(w);
    rec.a.assign(static_cast<std::size_t>(k), arm);
    rec.c.assign(static_cast<std::size_t>(k), Censor::uncensored);
    rec.y.assign(static_cast<std::size_t>(k), Outcome::no);
    rec.l.assign(static_cast<std::size_t>(k > 0 ? k - 1 : 0), std::nullopt);
    for (int t = 1; t <= k; ++t) {
        if (event_month && t >= *event_month) rec.y[t - 1] = Outcome::yes;
        if (censor_month && t >= *censor_month) {
            rec.y[t - 1] = Outcome::na;
            rec.c[t - 1] = Censor::censored;
        }
    }
    return rec;
}

inline std::vector<Outcome> outcomes(const std::string& pattern) {
    std::vector<Outcome> out;
    for (char ch : pattern) {
        if (ch == '0') out.push_back(Outcome::no);
        if (ch == '1') out.push_back(Outcome::yes);
        if (ch == '.') out.push_back(Outcome::na);
    }
    return out;
}

inline std::vector<Censor> censors(const std::string& pattern) {
    std::vector<Censor> out;
    for (char ch : pattern) {
        if (ch == '0') out.push_back(Censor::uncensored);
        if (ch == '1') out.push_back(Censor::censored);
    }
    return out;
}

// The six hypothetical subjects of the follow-up figure, K = 12:
//   S1 survivor; S2 event at month 9; S3 censored at month 11;
//   S4 terminal ICE (death from another cause) at month 5, encoded as
//      censoring before any strategy is applied;
//   S5 event at month 7 with treatment discontinuation at month 4
//      (A(4..6) absent while alive, collection continues);
//   S6 censored at month 8 with rescue medication at month 2.
struct FigureSubjects {
    TrialDataset data;
    IceRecords ices;
};

inline FigureSubjects figure_subjects() {
    const int k = 12;
    FigureSubjects fig;
    fig.data.timeline = Timeline{k, "month"};
    fig.data.treatment_labels = {{0, "control"}, {1, "treated"}};

    fig.data.subjects.push_back(make_subject("S1", 1, k));
    fig.data.subjects.push_back(make_subject("S2", 1, k, 9));
    fig.data.subjects.push_back(make_subject("S3", 1, k, std::nullopt, 11));
    fig.data.subjects.push_back(make_subject("S4", 1, k, std::nullopt, 5));

    auto s5 = make_subject("S5", 1, k, 7);
    for (int u = 4; u <= 6; ++u) s5.a[u] = kTreatAbsent;
    fig.data.subjects.push_back(std::move(s5));

    fig.data.subjects.push_back(make_subject("S6", 1, k, std::nullopt, 8));

    fig.ices.push_back({"S4", "death-other-cause", 5, true});
    fig.ices.push_back({"S5", "discontinuation", 4, false});
    fig.ices.push_back({"S6", "rescue", 2, false});
    return fig;
}

// The six displayed rows of the MI table, K = 12. Subjects 1-2 control,
// 397-400 treated; 1 censored at month 5, 2 and 397 events at month 4,
// 398 censored at month 8, 399 censored at month 6, 400 a survivor.
inline TrialDataset mi_table_dataset() {
    const int k = 12;
    TrialDataset ds;
    ds.timeline = Timeline{k, "month"};
    ds.treatment_labels = {{0, "control"}, {1, "treated"}};
    ds.subjects.push_back(make_subject("1", 0, k, std::nullopt, 5));
    ds.subjects.push_back(make_subject("2", 0, k, 4));
    ds.subjects.push_back(make_subject("397", 1, k, 4));
    ds.subjects.push_back(make_subject("398", 1, k, std::nullopt, 8));
    ds.subjects.push_back(make_subject("399", 1, k, std::nullopt, 6));
    ds.subjects.push_back(make_subject("400", 1, k));
    return ds;
}

// One subject per month walk with constant hazards; the censoring decision at
// node t-1 precedes the outcome at t, matching the node order.
inline SubjectRecord random_subject(Rng& rng, std::string id, TreatCode arm, int k,
                                    double event_hazard, double censor_hazard,
                                    std::vector<double> w = {}) {
    SubjectRecord rec;
    rec.id = std::move(id);
    rec.w = std::move(w);
    rec.a.assign(static_cast<std::size_t>(k), arm);
    rec.c.assign(static_cast<std::size_t>(k), Censor::uncensored);
    rec.y.assign(static_cast<std::size_t>(k), Outcome::no);
    rec.l.assign(static_cast<std::size_t>(k > 0 ? k - 1 : 0), std::nullopt);
    bool event = false, cens = false;
    for (int t = 1; t <= k; ++t) {
        if (cens) {
            rec.c[t - 1] = Censor::censored;
            rec.y[t - 1] = Outcome::na;
            continue;
        }
        if (event) {
            rec.y[t - 1] = Outcome::yes;
            continue;
        }
        if (rng.bernoulli(censor_hazard)) {
            cens = true;
            rec.c[t - 1] = Censor::censored;
            rec.y[t - 1] = Outcome::na;
            continue;
        }
        if (rng.bernoulli(event_hazard)) {
            event = true;
            rec.y[t - 1] = Outcome::yes;
        }
    }
    return rec;
}

inline TrialDataset random_trial(std::uint64_t seed, int n, int k, double event_hazard,
                                 double censor_hazard) {
    Rng rng(seed);
    TrialDataset ds;
    ds.timeline = Timeline{k, "month"};
    for (int i = 0; i < n; ++i)
        ds.subjects.push_back(random_subject(rng, "p" + std::to_string(i),
                                             static_cast<TreatCode>(i % 2), k, event_hazard,
                                             censor_hazard));
    return ds;
}

}  // namespace fixtures
