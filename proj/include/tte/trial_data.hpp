#pragma once

// Discrete-time longitudinal trial data model.
//
// A trial with K follow-ups stores, per subject, the node sequence
//   W, A(0), C(0), Y(1), L(1), A(1), C(1), Y(2), ..., A(K-1), C(K-1), Y(K)
// with zero-based storage: a[i] = A(i), c[i] = C(i), y[i] = Y(i+1),
// l[i] = L(i+1). Two conventions are enforced throughout:
//   * once Y(t) = 1 it stays 1 (the primary event is absorbing);
//   * Y(t) is NA exactly when C(t-1) is censored, and censoring is absorbing.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tte/errors.hpp"

namespace tte {

// Outcome cell. NA is a distinct sentinel, never a number, so censored cells
// cannot silently enter arithmetic.
enum class Outcome : std::int8_t { no = 0, yes = 1, na = 2 };

enum class Censor : std::uint8_t { uncensored = 0, censored = 1 };

// Treatment codes are nonnegative; kTreatAbsent marks discontinuation and is
// only ever interpreted by the strategy engine.
using TreatCode = std::int16_t;
inline constexpr TreatCode kTreatAbsent = -1;

struct Timeline {
    int k = 1;                  // number of follow-ups, t = 1..k
    std::string unit = "month"; // metadata only

    Timeline() = default;
    Timeline(int k_, std::string unit_ = "month") : k(k_), unit(std::move(unit_)) {
        if (k < 1) throw DomainError("timeline needs at least one follow-up");
    }

    bool operator==(const Timeline&) const = default;
};

using LCell = std::optional<std::vector<double>>;

struct SubjectRecord {
    std::string id;
    std::vector<double> w;       // baseline covariates
    std::vector<TreatCode> a;    // length K
    std::vector<Censor> c;       // length K
    std::vector<Outcome> y;      // length K
    std::vector<LCell> l;        // length K-1; nullopt = NA

    bool operator==(const SubjectRecord&) const = default;

    // 1-based month of the first event, if any.
    std::optional<int> first_event_month() const {
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] == Outcome::yes) return static_cast<int>(i) + 1;
        return std::nullopt;
    }

    // 0-based index of the first censored mark, if any.
    std::optional<int> first_censored_index() const {
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c[i] == Censor::censored) return static_cast<int>(i);
        return std::nullopt;
    }
};

struct TrialDataset {
    Timeline timeline;
    std::vector<SubjectRecord> subjects;
    std::vector<std::string> covariate_names;    // names of W entries
    std::vector<std::string> l_covariate_names;  // names of each L(t) entry
    std::map<TreatCode, std::string> treatment_labels;

    bool operator==(const TrialDataset&) const = default;

    const SubjectRecord* find(const std::string& id) const {
        for (const auto& s : subjects)
            if (s.id == id) return &s;
        return nullptr;
    }
};

struct Violation {
    std::string subject_id;
    int index = 0;  // 1-based follow-up month where applicable
    std::string rule;
    std::string detail;
};

// Rewrites censoring marks so they agree with the NA pattern of y: censored
// from the first NA month onward, uncensored elsewhere. The canonical inverse
// of the missingness convention.
inline void sync_censor_marks(SubjectRecord& rec) {
    const int k = static_cast<int>(rec.y.size());
    int first_na = k;  // index into y
    for (int i = 0; i < k; ++i) {
        if (rec.y[i] == Outcome::na) {
            first_na = i;
            break;
        }
    }
    for (int i = 0; i < k; ++i)
        rec.c[i] = (i >= first_na) ? Censor::censored : Censor::uncensored;
}

namespace detail {

inline void apply_conventions_record(SubjectRecord& rec) {
    const int k = static_cast<int>(rec.y.size());

    std::optional<int> event_month;
    for (int i = 0; i < k; ++i) {
        if (rec.y[i] == Outcome::yes) {
            event_month = i + 1;
            break;
        }
    }
    std::optional<int> cens_idx = rec.first_censored_index();

    if (event_month && cens_idx && *event_month >= *cens_idx + 1) {
        throw ConventionConflictError(rec.id, *event_month,
                                      "event recorded at an index already marked censored");
    }

    if (event_month) {
        // Event wins: carry it forward and drop censoring marks, which can
        // only sit at or after the event month here.
        for (int i = 0; i < k; ++i) {
            if (i + 1 >= *event_month) {
                rec.y[i] = Outcome::yes;
            } else if (rec.y[i] == Outcome::na) {
                throw ConventionConflictError(rec.id, i + 1,
                                              "NA outcome before the event is not explained by censoring");
            }
        }
        std::fill(rec.c.begin(), rec.c.end(), Censor::uncensored);
        return;
    }

    if (cens_idx) {
        for (int i = 0; i < k; ++i) {
            if (i >= *cens_idx) {
                rec.y[i] = Outcome::na;
                rec.c[i] = Censor::censored;
            } else if (rec.y[i] == Outcome::na) {
                throw ConventionConflictError(rec.id, i + 1,
                                              "NA outcome before the censoring point");
            } else {
                rec.c[i] = Censor::uncensored;
            }
        }
        for (std::size_t j = 0; j < rec.l.size(); ++j)
            if (static_cast<int>(j) >= *cens_idx) rec.l[j] = std::nullopt;
        return;
    }

    for (int i = 0; i < k; ++i)
        if (rec.y[i] == Outcome::na)
            throw ConventionConflictError(rec.id, i + 1,
                                          "NA outcome without any censoring mark");
}

}  // namespace detail

// Normalizes a raw dataset to the outcome/censoring conventions. Idempotent.
// Throws ConventionConflictError on records the conventions cannot produce.
inline TrialDataset apply_conventions(const TrialDataset& raw) {
    TrialDataset out = raw;
    for (auto& rec : out.subjects) detail::apply_conventions_record(rec);
    return out;
}

inline std::vector<Violation> validate_dataset(const TrialDataset& ds) {
    std::vector<Violation> out;
    const int k = ds.timeline.k;
    const std::size_t wdim = ds.covariate_names.size();

    std::set<std::string> seen;
    for (const auto& rec : ds.subjects) {
        if (!seen.insert(rec.id).second)
            out.push_back({rec.id, 0, "duplicate-id", "subject id appears more than once"});

        if (static_cast<int>(rec.a.size()) != k || static_cast<int>(rec.c.size()) != k ||
            static_cast<int>(rec.y.size()) != k || static_cast<int>(rec.l.size()) != std::max(0, k - 1)) {
            out.push_back({rec.id, 0, "length-mismatch", "sequence lengths do not match the timeline"});
            continue;  // index-based rules below assume consistent lengths
        }
        if (rec.w.size() != wdim)
            out.push_back({rec.id, 0, "covariate-dim", "baseline covariate count differs from header"});

        for (int i = 0; i < k; ++i)
            if (rec.a[i] < 0 && rec.a[i] != kTreatAbsent)
                out.push_back({rec.id, i + 1, "treat-code-range", "negative treatment code"});

        bool event_seen = false;
        for (int i = 0; i < k; ++i) {
            if (event_seen && rec.y[i] != Outcome::yes)
                out.push_back({rec.id, i + 1, "outcome-monotone", "outcome reverts after the event"});
            if (rec.y[i] == Outcome::yes) event_seen = true;
        }

        bool cens_seen = false;
        for (int i = 0; i < k; ++i) {
            if (cens_seen && rec.c[i] != Censor::censored)
                out.push_back({rec.id, i + 1, "censor-absorbing", "censoring mark reverts"});
            if (rec.c[i] == Censor::censored) cens_seen = true;
        }

        for (int i = 0; i < k; ++i) {
            const bool na = rec.y[i] == Outcome::na;
            const bool cens = rec.c[i] == Censor::censored;
            if (na != cens)
                out.push_back({rec.id, i + 1, "missing-iff-censored",
                               na ? "NA outcome at an uncensored follow-up"
                                  : "non-NA outcome at a censored follow-up"});
        }

        for (int j = 0; j < k - 1; ++j) {
            if (rec.c[j] == Censor::censored && rec.l[j].has_value())
                out.push_back({rec.id, j + 1, "l-missing-after-censor",
                               "time-dependent covariate present after censoring"});
            if (rec.l[j].has_value() && rec.l[j]->size() != ds.l_covariate_names.size())
                out.push_back({rec.id, j + 1, "covariate-dim",
                               "time-dependent covariate count differs from header"});
        }
    }
    return out;
}

// True when the subject can still have the event observed at follow-up t:
// uncensored at C(t-1) and event-free entering t.
inline bool at_risk(const SubjectRecord& rec, int t) {
    if (rec.c[t - 1] == Censor::censored) return false;
    return t == 1 || rec.y[t - 2] == Outcome::no;
}

inline std::vector<std::string> risk_set(const TrialDataset& ds, int t,
                                         std::optional<TreatCode> arm = std::nullopt) {
    if (t < 1 || t > ds.timeline.k)
        throw DomainError("risk_set: follow-up " + std::to_string(t) + " outside 1.." +
                          std::to_string(ds.timeline.k));
    std::vector<std::string> ids;
    for (const auto& rec : ds.subjects) {
        if (arm && rec.a[0] != *arm) continue;
        if (at_risk(rec, t)) ids.push_back(rec.id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace tte
