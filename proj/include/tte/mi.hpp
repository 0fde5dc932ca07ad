#pragma once

// Multiple imputation of censored outcome cells under CAR and the two
// reference-based assumptions (copy reference, jump to reference), following
// the four-step recipe: build a tentative dataset, impute under MAR with
// sequential per-follow-up logistic models, enforce the monotone convention,
// then reverse the tentative edits. Pooling uses Rubin's rules.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tte/design.hpp"
#include "tte/errors.hpp"
#include "tte/estimate.hpp"
#include "tte/logistic.hpp"
#include "tte/rng.hpp"
#include "tte/stats.hpp"
#include "tte/trial_data.hpp"

namespace tte {

enum class MiAssumption { car, cr, j2r };

inline const char* assumption_name(MiAssumption a) {
    switch (a) {
        case MiAssumption::car: return "CAR";
        case MiAssumption::cr: return "CR";
        case MiAssumption::j2r: return "J2R";
    }
    return "?";
}

struct MiSpec {
    MiAssumption assumption = MiAssumption::car;
    int m = 20;
    std::uint64_t seed = 1;
    std::optional<TreatCode> reference_arm;  // required for CR and J2R
    std::string estimator_label = "estimator";

    void check() const {
        if (m < 2) throw DomainError("mi: m must be at least 2");
        if (assumption != MiAssumption::car && !reference_arm)
            throw DomainError("mi: reference arm required for reference-based assumptions");
    }
};

// ---------------------------------------------------------------------------
// Step 1: tentative datasets with a restoration ledger

struct CellEdit {
    std::string subject_id;
    int month = 1;
    Outcome original = Outcome::no;
};

struct TentativeDataset {
    TrialDataset data;
    std::vector<std::pair<std::size_t, SubjectRecord>> deleted;   // original position, row
    std::map<std::string, std::vector<TreatCode>> original_a;
    std::vector<CellEdit> y_overwrites;                           // J2R only
    std::map<std::string, std::vector<LCell>> original_l;         // J2R only
};

inline bool is_complete_case(const SubjectRecord& rec) {
    return !rec.first_censored_index().has_value();
}

namespace detail {

inline TentativeDataset make_tentative_reference(const TrialDataset& ds, TreatCode reference_arm,
                                                 bool jump) {
    bool ref_present = false;
    for (const auto& rec : ds.subjects) ref_present = ref_present || rec.a[0] == reference_arm;
    if (!ref_present) throw DomainError("mi: reference arm has no subjects");

    TentativeDataset out;
    out.data.timeline = ds.timeline;
    out.data.covariate_names = ds.covariate_names;
    out.data.l_covariate_names = ds.l_covariate_names;
    out.data.treatment_labels = ds.treatment_labels;

    for (std::size_t pos = 0; pos < ds.subjects.size(); ++pos) {
        const auto& rec = ds.subjects[pos];
        if (rec.a[0] == reference_arm) {
            out.data.subjects.push_back(rec);
            continue;
        }
        if (is_complete_case(rec)) {
            out.deleted.emplace_back(pos, rec);
            continue;
        }
        SubjectRecord t = rec;
        out.original_a[t.id] = t.a;
        std::fill(t.a.begin(), t.a.end(), reference_arm);
        if (jump) {
            for (std::size_t i = 0; i < t.y.size(); ++i)
                if (t.y[i] != Outcome::na)
                    out.y_overwrites.push_back({t.id, static_cast<int>(i) + 1, t.y[i]});
            std::fill(t.y.begin(), t.y.end(), Outcome::na);
            out.original_l[t.id] = t.l;
            std::fill(t.l.begin(), t.l.end(), std::nullopt);
            sync_censor_marks(t);
        }
        out.data.subjects.push_back(std::move(t));
    }
    return out;
}

}  // namespace detail

inline TentativeDataset make_tentative_car(const TrialDataset& ds) {
    TentativeDataset out;
    out.data = ds;
    return out;
}

// Deletes never-censored non-reference subjects and sets the remaining
// non-reference arm codes to the reference.
inline TentativeDataset make_tentative_cr(const TrialDataset& ds, TreatCode reference_arm) {
    return detail::make_tentative_reference(ds, reference_arm, false);
}

// As CR, and additionally blanks every retained non-reference outcome so the
// whole post-baseline history is imputed from the reference profile.
inline TentativeDataset make_tentative_j2r(const TrialDataset& ds, TreatCode reference_arm) {
    return detail::make_tentative_reference(ds, reference_arm, true);
}

// Exact inverse of Step 1; performs no convention adjustment of its own.
inline TrialDataset restore_original(const TentativeDataset& tentative,
                                     const TrialDataset& completed) {
    TrialDataset out = completed;

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < out.subjects.size(); ++i) index[out.subjects[i].id] = i;

    for (const auto& [id, a] : tentative.original_a) {
        auto it = index.find(id);
        if (it == index.end()) throw DomainError("restore: subject '" + id + "' missing");
        out.subjects[it->second].a = a;
    }
    for (const auto& edit : tentative.y_overwrites) {
        auto it = index.find(edit.subject_id);
        if (it == index.end()) throw DomainError("restore: subject '" + edit.subject_id + "' missing");
        out.subjects[it->second].y[static_cast<std::size_t>(edit.month - 1)] = edit.original;
    }
    for (const auto& [id, l] : tentative.original_l) {
        auto it = index.find(id);
        if (it == index.end()) throw DomainError("restore: subject '" + id + "' missing");
        out.subjects[it->second].l = l;
    }
    // Censor marks follow the restored NA pattern (the canonical inverse).
    for (auto& rec : out.subjects)
        if (tentative.original_a.count(rec.id)) sync_censor_marks(rec);

    std::vector<std::pair<std::size_t, SubjectRecord>> deleted = tentative.deleted;
    std::sort(deleted.begin(), deleted.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [pos, rec] : deleted) {
        auto at = out.subjects.begin() +
                  static_cast<std::ptrdiff_t>(std::min(pos, out.subjects.size()));
        out.subjects.insert(at, rec);
    }
    return out;
}

// Carries the first event forward and re-derives censor marks. Input must be
// fully observed.
inline TrialDataset monotone_adjust(const TrialDataset& ds) {
    TrialDataset out = ds;
    for (auto& rec : out.subjects) {
        bool event = false;
        for (auto& y : rec.y) {
            if (y == Outcome::na)
                throw DomainError("monotone_adjust: dataset still has NA cells");
            if (event) y = Outcome::yes;
            if (y == Outcome::yes) event = true;
        }
        sync_censor_marks(rec);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Step 2: sequential per-follow-up hazard models

struct MiModelSpec {
    std::vector<std::string> terms;  // design over W; empty = linear in every W
    bool include_arm = true;
    bool include_last_l = true;
};

struct MiDesign {
    std::vector<Term> terms;
    bool include_arm = true;
    std::size_t l_dim = 0;
    int t = 1;

    Eigen::Index cols() const {
        return 1 + static_cast<Eigen::Index>(terms.size()) + (include_arm ? 1 : 0) +
               static_cast<Eigen::Index>(l_dim);
    }

    Eigen::RowVectorXd row(const SubjectRecord& rec) const {
        Eigen::RowVectorXd x(cols());
        Eigen::Index c = 0;
        x(c++) = 1.0;
        for (const auto& term : terms) x(c++) = term.value(rec.w);
        if (include_arm) x(c++) = static_cast<double>(rec.a[0]);
        if (l_dim > 0) {
            const auto l = last_l_before(rec, t, l_dim);
            for (std::size_t j = 0; j < l_dim; ++j) x(c++) = l[j];
        }
        return x;
    }
};

// One follow-up's conditional model: a logistic hazard fit, or an empirical
// rate when the fit is degenerate. Prior outcomes enter structurally: the fit
// is restricted to at-risk rows and an earlier event forces later cells to 1.
struct MiModelEntry {
    MiDesign design;
    std::optional<LogisticFit> fit;
    std::vector<Eigen::Index> kept;
    double rate = 0.0;
    bool fallback = false;
    int n_rows = 0;

    double probability(const SubjectRecord& rec, const std::optional<Eigen::VectorXd>& beta) const {
        if (!fit) return rate;
        Eigen::RowVectorXd full = design.row(rec);
        Eigen::RowVectorXd x(static_cast<Eigen::Index>(kept.size()));
        for (std::size_t j = 0; j < kept.size(); ++j)
            x(static_cast<Eigen::Index>(j)) = full(kept[j]);
        return beta ? expit(x.dot(*beta)) : fit->predict(x);
    }
};

struct ImputationModels {
    std::vector<MiModelEntry> by_followup;  // index t-1
};

inline ImputationModels fit_imputation_models(const TrialDataset& ds,
                                              const MiModelSpec& spec = {}) {
    const int k = ds.timeline.k;
    ImputationModels out;
    out.by_followup.resize(static_cast<std::size_t>(k));

    MiDesign base;
    base.terms = spec.terms.empty() ? linear_terms(ds.covariate_names)
                                    : parse_terms(spec.terms, ds.covariate_names);
    base.include_arm = spec.include_arm;
    base.l_dim = spec.include_last_l ? ds.l_covariate_names.size() : 0;

    double carry_rate = 0.0;  // used when a follow-up has no observed at-risk rows
    for (int t = 1; t <= k; ++t) {
        auto& entry = out.by_followup[static_cast<std::size_t>(t - 1)];
        entry.design = base;
        entry.design.t = t;

        std::vector<std::size_t> rows;
        int events = 0;
        for (std::size_t i = 0; i < ds.subjects.size(); ++i) {
            const auto& rec = ds.subjects[i];
            if (rec.y[t - 1] == Outcome::na) continue;
            if (t > 1 && rec.y[t - 2] != Outcome::no) continue;  // at-risk rows only
            rows.push_back(i);
            if (rec.y[t - 1] == Outcome::yes) ++events;
        }
        entry.n_rows = static_cast<int>(rows.size());

        if (rows.empty()) {
            entry.rate = carry_rate;
            entry.fallback = true;
            continue;
        }
        const double mean_rate = static_cast<double>(events) / static_cast<double>(rows.size());
        carry_rate = mean_rate;
        if (events == 0 || events == static_cast<int>(rows.size())) {
            entry.rate = mean_rate;
            entry.fallback = true;
            continue;
        }

        Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), base.cols());
        Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            x.row(static_cast<Eigen::Index>(r)) = entry.design.row(ds.subjects[rows[r]]);
            y(static_cast<Eigen::Index>(r)) =
                ds.subjects[rows[r]].y[t - 1] == Outcome::yes ? 1.0 : 0.0;
        }
        try {
            const Eigen::VectorXd ones = Eigen::VectorXd::Ones(x.rows());
            entry.kept = nonconstant_columns(x, ones);
            auto fit = fit_logistic(select_columns(x, entry.kept), y, ones);
            if (fit.converged && !fit.separated) {
                entry.fit = std::move(fit);
            } else {
                entry.rate = mean_rate;
                entry.fallback = true;
            }
        } catch (const SingularDesignError&) {
            entry.rate = mean_rate;
            entry.fallback = true;
        }
    }
    return out;
}

// Per-imputation coefficient draws from the asymptotic normal approximation;
// empirical-rate fallbacks stay fixed.
struct ImputationDraw {
    std::vector<std::optional<Eigen::VectorXd>> beta;  // index t-1
};

// ---------------------------------------------------------------------------
// Step 2/3: filling one dataset

namespace detail {

// Fills the NA cells of one record in follow-up order. An earlier (observed
// or imputed) event forces later cells to 1 without consuming randomness.
inline void impute_record(SubjectRecord& rec, const ImputationModels& models,
                          const ImputationDraw* draw, Rng& rng) {
    const int k = static_cast<int>(rec.y.size());
    bool event = false;
    for (int t = 1; t <= k; ++t) {
        auto& y = rec.y[t - 1];
        if (y != Outcome::na) {
            if (y == Outcome::yes) event = true;
            continue;
        }
        if (event) {
            y = Outcome::yes;
            continue;
        }
        const auto& entry = models.by_followup[static_cast<std::size_t>(t - 1)];
        const std::optional<Eigen::VectorXd>& beta =
            draw ? draw->beta[static_cast<std::size_t>(t - 1)] : std::optional<Eigen::VectorXd>{};
        const double p = entry.probability(rec, beta);
        y = rng.uniform() < p ? Outcome::yes : Outcome::no;
        if (y == Outcome::yes) event = true;
    }
    sync_censor_marks(rec);
}

inline std::uint64_t cell_stream(int imputation, const std::string& subject_id) {
    return fnv1a64("cells/" + std::to_string(imputation) + "/" + subject_id);
}

inline std::uint64_t param_stream(MiAssumption assumption, int imputation, int t) {
    return fnv1a64("param/" + std::string(assumption_name(assumption)) + "/" +
                   std::to_string(imputation) + "/" + std::to_string(t));
}

inline ImputationDraw draw_parameters(const ImputationModels& models, MiAssumption assumption,
                                      int imputation, std::uint64_t seed) {
    ImputationDraw draw;
    draw.beta.resize(models.by_followup.size());
    for (std::size_t t = 0; t < models.by_followup.size(); ++t) {
        const auto& entry = models.by_followup[t];
        if (!entry.fit) continue;
        Rng rng(mix_seed(seed, param_stream(assumption, imputation, static_cast<int>(t) + 1)));
        draw.beta[t] = entry.fit->draw(rng);
    }
    return draw;
}

inline TrialDataset impute_dataset(const TrialDataset& ds, const ImputationModels& models,
                                   const ImputationDraw* draw, std::uint64_t seed,
                                   int imputation) {
    TrialDataset out = ds;
    for (auto& rec : out.subjects) {
        bool any_na = false;
        for (auto y : rec.y) any_na = any_na || y == Outcome::na;
        if (!any_na) continue;
        Rng rng(mix_seed(seed, cell_stream(imputation, rec.id)));
        impute_record(rec, models, draw, rng);
    }
    return out;
}

}  // namespace detail

// Single completed dataset from fitted probabilities (no parameter draws).
inline TrialDataset impute_car(const TrialDataset& ds, const ImputationModels& models,
                               std::uint64_t seed) {
    auto completed = detail::impute_dataset(ds, models, nullptr, seed, 0);
    return monotone_adjust(completed);
}

// ---------------------------------------------------------------------------
// Pooling

struct PooledEstimate {
    double point = 0.0;
    double within_var = 0.0;
    double between_var = 0.0;
    double total_var = 0.0;
    double df = std::numeric_limits<double>::infinity();
    std::pair<double, double> ci95{0.0, 0.0};
    int m = 0;
};

inline PooledEstimate rubin_pool(const std::vector<double>& points,
                                 const std::vector<double>& variances) {
    if (points.size() != variances.size())
        throw DomainError("rubin_pool: points and variances must align");
    if (points.size() < 2) throw DomainError("rubin_pool: need at least two imputations");

    PooledEstimate out;
    out.m = static_cast<int>(points.size());
    out.point = mean(points);
    out.within_var = mean(variances);
    out.between_var = sample_variance(points);
    const double m = static_cast<double>(out.m);
    const double b_scaled = (1.0 + 1.0 / m) * out.between_var;
    out.total_var = out.within_var + b_scaled;
    if (out.between_var > 0.0) {
        const double ratio = 1.0 + out.within_var / b_scaled;
        out.df = (m - 1.0) * ratio * ratio;
    } else {
        out.df = std::numeric_limits<double>::infinity();
    }
    const double q = std::isinf(out.df) ? normal_quantile(0.975)
                                        : student_t_quantile(0.975, out.df);
    const double half = q * std::sqrt(out.total_var);
    out.ci95 = {out.point - half, out.point + half};
    return out;
}

// ---------------------------------------------------------------------------
// Step 1-4 loop

using MiEstimator = std::function<EstimateResult(const TrialDataset&)>;

struct MiRun {
    PooledEstimate pooled;
    std::vector<EstimateResult> per_imputation;
    int failures = 0;
};

inline TentativeDataset make_tentative(const TrialDataset& ds, const MiSpec& spec) {
    switch (spec.assumption) {
        case MiAssumption::car: return make_tentative_car(ds);
        case MiAssumption::cr: return make_tentative_cr(ds, *spec.reference_arm);
        case MiAssumption::j2r: return make_tentative_j2r(ds, *spec.reference_arm);
    }
    throw DomainError("mi: unknown assumption");
}

inline MiRun run_mi(const TrialDataset& ds, const MiSpec& spec, const MiEstimator& estimator,
                    const MiModelSpec& model_spec = {}) {
    spec.check();
    auto tentative = make_tentative(ds, spec);
    auto models = fit_imputation_models(tentative.data, model_spec);

    MiRun run;
    std::vector<double> points, variances;
    for (int j = 0; j < spec.m; ++j) {
        auto draw = detail::draw_parameters(models, spec.assumption, j, spec.seed);
        auto completed = detail::impute_dataset(tentative.data, models, &draw, spec.seed, j);
        completed = monotone_adjust(completed);
        auto final_ds = restore_original(tentative, completed);
        final_ds = monotone_adjust(final_ds);
        try {
            auto est = estimator(final_ds);
            if (!est.se)
                throw DomainError("mi: estimator must report a standard error for pooling");
            points.push_back(est.point);
            variances.push_back(*est.se * *est.se);
            run.per_imputation.push_back(std::move(est));
        } catch (const Error&) {
            ++run.failures;
        }
    }
    if (points.size() < 2)
        throw DomainError("mi: fewer than two imputations produced estimates");
    run.pooled = rubin_pool(points, variances);
    return run;
}

// ---------------------------------------------------------------------------
// Combined recipe: different assumptions for cells censored by different ICE
// kinds (attribution tagged by the strategy engine); unattributed censoring
// is imputed under CAR. Per-subject draws reuse the single-assumption
// streams, so a run in which every censored subject carries one kind matches
// the corresponding run_mi exactly.

struct CombinedMiSpec {
    std::map<std::string, MiAssumption> assumption_by_kind;
    int m = 20;
    std::uint64_t seed = 1;
    std::optional<TreatCode> reference_arm;
    std::string estimator_label = "estimator";

    void check() const {
        if (m < 2) throw DomainError("mi: m must be at least 2");
        for (const auto& [kind, a] : assumption_by_kind)
            if (a != MiAssumption::car && !reference_arm)
                throw DomainError("mi: reference arm required for kind '" + kind + "'");
    }
};

inline MiRun combined_mi(const TrialDataset& ds,
                         const std::map<std::string, std::string>& censor_attribution,
                         const CombinedMiSpec& spec, const MiEstimator& estimator,
                         const MiModelSpec& model_spec = {}) {
    spec.check();

    std::map<std::string, MiAssumption> by_subject;
    for (const auto& [id, kind] : censor_attribution) {
        auto it = spec.assumption_by_kind.find(kind);
        if (it == spec.assumption_by_kind.end())
            throw PlanError("mi: no assumption mapped for ICE kind '" + kind + "'");
        by_subject[id] = it->second;
    }

    std::set<MiAssumption> needed{MiAssumption::car};
    for (const auto& [id, a] : by_subject) {
        (void)id;
        needed.insert(a);
    }

    struct Prepared {
        TentativeDataset tentative;
        ImputationModels models;
        std::map<std::string, std::size_t> index;
    };
    std::map<MiAssumption, Prepared> prepared;
    for (auto a : needed) {
        MiSpec sub;
        sub.assumption = a;
        sub.m = spec.m;
        sub.seed = spec.seed;
        sub.reference_arm = spec.reference_arm;
        Prepared p;
        p.tentative = make_tentative(ds, sub);
        p.models = fit_imputation_models(p.tentative.data, model_spec);
        for (std::size_t i = 0; i < p.tentative.data.subjects.size(); ++i)
            p.index[p.tentative.data.subjects[i].id] = i;
        prepared.emplace(a, std::move(p));
    }

    MiRun run;
    std::vector<double> points, variances;
    for (int j = 0; j < spec.m; ++j) {
        std::map<MiAssumption, ImputationDraw> draws;
        for (auto& [a, p] : prepared)
            draws[a] = detail::draw_parameters(p.models, a, j, spec.seed);

        TrialDataset completed = ds;
        for (auto& rec : completed.subjects) {
            bool any_na = false;
            for (auto y : rec.y) any_na = any_na || y == Outcome::na;

            auto ait = by_subject.find(rec.id);
            const MiAssumption a = ait == by_subject.end() ? MiAssumption::car : ait->second;
            const auto& p = prepared.at(a);

            auto pit = p.index.find(rec.id);
            if (pit == p.index.end()) continue;  // deleted complete case; nothing to impute
            const SubjectRecord& trec = p.tentative.data.subjects[pit->second];

            bool tentative_na = false;
            for (auto y : trec.y) tentative_na = tentative_na || y == Outcome::na;
            if (!any_na && !tentative_na) continue;

            SubjectRecord filled = trec;
            Rng rng(mix_seed(spec.seed, detail::cell_stream(j, rec.id)));
            detail::impute_record(filled, p.models, &draws.at(a), rng);

            // Keep originally observed cells; imputed values fill the rest.
            for (std::size_t i = 0; i < rec.y.size(); ++i)
                if (rec.y[i] == Outcome::na) rec.y[i] = filled.y[i];
            sync_censor_marks(rec);
        }
        completed = monotone_adjust(completed);
        try {
            auto est = estimator(completed);
            if (!est.se)
                throw DomainError("mi: estimator must report a standard error for pooling");
            points.push_back(est.point);
            variances.push_back(*est.se * *est.se);
            run.per_imputation.push_back(std::move(est));
        } catch (const Error&) {
            ++run.failures;
        }
    }
    if (points.size() < 2)
        throw DomainError("mi: fewer than two imputations produced estimates");
    run.pooled = rubin_pool(points, variances);
    return run;
}

}  // namespace tte
