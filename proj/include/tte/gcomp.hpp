#pragma once

// Sequential-regression g-computation for survival under a static regime,
// with an optional one-parameter-per-stage targeting step and influence-curve
// standard errors. Backward recursion over follow-ups: each stage regresses
// the running pseudo-outcome (event indicator or next-stage prediction) on
// baseline history among at-risk, uncensored, regime-consistent subjects.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tte/design.hpp"
#include "tte/errors.hpp"
#include "tte/estimate.hpp"
#include "tte/logistic.hpp"
#include "tte/stats.hpp"
#include "tte/strategy.hpp"
#include "tte/trial_data.hpp"

namespace tte {

struct GcompOptions {
    std::vector<std::string> terms;  // design over W; empty = linear in every W
    bool include_last_l = true;      // append carried-forward L columns when present
    bool saturated = false;          // exact per-stratum means instead of logistic fits
    int horizon = 0;                 // 0 = K
    CensorModelOptions censor;       // targeting weights only
    int bootstrap_b = 0;             // >0 adds a bootstrap se to seq_gcomp
    std::uint64_t bootstrap_seed = 7;
};

struct GcompStage {
    int t = 0;
    int n_fit = 0;
    bool fallback = false;     // fluctuation failed to converge; left untargeted
    double epsilon = 0.0;      // fluctuation coefficient (targeted runs)
};

struct GcompDetail {
    std::vector<GcompStage> stages;  // in fit order, t = horizon..1
    std::vector<double> q1;          // stage-1 event-probability predictions per subject
};

namespace detail {

struct StageDesign {
    bool saturated = false;
    std::vector<Term> terms;
    std::size_t l_dim = 0;  // columns appended after the W terms
    int t = 0;

    Eigen::RowVectorXd row(const SubjectRecord& rec) const {
        Eigen::RowVectorXd x(1 + static_cast<Eigen::Index>(terms.size() + l_dim));
        x(0) = 1.0;
        for (std::size_t j = 0; j < terms.size(); ++j)
            x(1 + static_cast<Eigen::Index>(j)) = terms[j].value(rec.w);
        if (l_dim > 0) {
            const auto l = last_l_before(rec, t, l_dim);
            for (std::size_t j = 0; j < l_dim; ++j)
                x(1 + static_cast<Eigen::Index>(terms.size() + j)) = l[j];
        }
        return x;
    }

    // Stratum key for the saturated fit: exact covariate pattern.
    std::vector<double> key(const SubjectRecord& rec) const {
        std::vector<double> k = rec.w;
        if (l_dim > 0) {
            const auto l = last_l_before(rec, t, l_dim);
            k.insert(k.end(), l.begin(), l.end());
        }
        return k;
    }
};

// One fitted stage: either a stratum-mean table or a logistic fit plus the
// retained column indices.
struct StageModel {
    StageDesign design;
    std::map<std::vector<double>, double> table;
    std::optional<LogisticFit> fit;
    std::vector<Eigen::Index> kept;

    double predict(const SubjectRecord& rec, int stage_t) const {
        if (design.saturated) {
            auto it = table.find(design.key(rec));
            if (it == table.end())
                throw IdentifiabilityError(stage_t,
                                           "covariate pattern unsupported in the stage fit");
            return it->second;
        }
        Eigen::RowVectorXd full = design.row(rec);
        Eigen::RowVectorXd x(static_cast<Eigen::Index>(kept.size()));
        for (std::size_t j = 0; j < kept.size(); ++j)
            x(static_cast<Eigen::Index>(j)) = full(kept[j]);
        return fit->predict(x);
    }
};

inline double clamped_logit(double p) {
    const double eps = 1e-12;
    return logit(std::min(1.0 - eps, std::max(eps, p)));
}

}  // namespace detail

// Shared recursion. With `targeted` each stage's predictions receive a
// weighted intercept-only logistic fluctuation on the logit scale, using
// cumulative inverse-probability weights (empirical regime share times the
// inverse censoring products), and the result carries an influence-curve se.
inline EstimateResult sequential_survival(const TrialDataset& ds, const RegimeSpec& regime,
                                          bool targeted, const GcompOptions& opts = {},
                                          GcompDetail* detail_out = nullptr) {
    const int k = ds.timeline.k;
    if (static_cast<int>(regime.abar.size()) != k)
        throw DomainError("gcomp: regime length must equal K");
    const int horizon = opts.horizon > 0 ? opts.horizon : k;
    if (horizon < 1 || horizon > k) throw DomainError("gcomp: horizon outside 1..K");
    const std::size_t n = ds.subjects.size();
    if (n == 0) throw DomainError("gcomp: empty dataset");

    detail::StageDesign base_design;
    base_design.saturated = opts.saturated;
    if (!opts.saturated)
        base_design.terms = opts.terms.empty() ? linear_terms(ds.covariate_names)
                                               : parse_terms(opts.terms, ds.covariate_names);
    if (opts.include_last_l) base_design.l_dim = ds.l_covariate_names.size();

    // Targeting weights: regime share and censoring products.
    CensorProbabilities cprobs;
    double regime_share = 0.0;
    if (targeted) {
        cprobs = censor_probabilities(ds, opts.censor);
        int followers = 0;
        for (const auto& rec : ds.subjects)
            if (rec.a[0] == regime.abar[0]) ++followers;
        regime_share = static_cast<double>(followers) / static_cast<double>(n);
        if (regime_share <= 0.0)
            throw IdentifiabilityError(1, "no subjects start on the requested regime");
    }

    GcompDetail detail;
    std::vector<double> q_next(n, 0.0);  // targeted predictions for stage t+1
    bool any_fallback = false;

    std::vector<double> ic(n, 0.0);

    for (int t = horizon; t >= 1; --t) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& rec = ds.subjects[i];
            if (!at_risk(rec, t)) continue;
            if (!follows_regime(rec, regime, t)) continue;
            rows.push_back(i);
        }
        if (rows.empty())
            throw IdentifiabilityError(t, "no regime-consistent at-risk subjects at stage " +
                                              std::to_string(t));

        std::vector<double> z(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto& rec = ds.subjects[rows[r]];
            if (t == horizon)
                z[r] = rec.y[t - 1] == Outcome::yes ? 1.0 : 0.0;
            else
                z[r] = rec.y[t - 1] == Outcome::yes ? 1.0 : q_next[rows[r]];
        }

        detail::StageModel model;
        model.design = base_design;
        model.design.t = t;

        if (opts.saturated) {
            std::map<std::vector<double>, std::pair<double, double>> acc;  // key -> (sum, count)
            for (std::size_t r = 0; r < rows.size(); ++r) {
                auto key = model.design.key(ds.subjects[rows[r]]);
                auto& cell = acc[key];
                cell.first += z[r];
                cell.second += 1.0;
            }
            for (auto& [key, cell] : acc) model.table[key] = cell.first / cell.second;
        } else {
            Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()),
                              model.design.row(ds.subjects[rows[0]]).size());
            Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                x.row(static_cast<Eigen::Index>(r)) = model.design.row(ds.subjects[rows[r]]);
                y(static_cast<Eigen::Index>(r)) = z[r];
            }
            const Eigen::VectorXd ones = Eigen::VectorXd::Ones(x.rows());
            model.kept = nonconstant_columns(x, ones);
            model.fit = fit_logistic(select_columns(x, model.kept), y, ones);
        }

        // Predictions for everyone; they feed the next stage and the final mean.
        std::vector<double> q_t(n);
        for (std::size_t i = 0; i < n; ++i) q_t[i] = model.predict(ds.subjects[i], t);

        GcompStage stage;
        stage.t = t;
        stage.n_fit = static_cast<int>(rows.size());

        if (targeted) {
            std::vector<double> w(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                double denom = regime_share;
                for (int u = 0; u < t - 1; ++u)
                    denom *= cprobs.p_unc[rows[r]][static_cast<std::size_t>(u)];
                w[r] = 1.0 / denom;
            }

            Eigen::MatrixXd ones(static_cast<Eigen::Index>(rows.size()), 1);
            ones.setOnes();
            Eigen::VectorXd resp(static_cast<Eigen::Index>(rows.size()));
            Eigen::VectorXd wts(static_cast<Eigen::Index>(rows.size()));
            Eigen::VectorXd offs(static_cast<Eigen::Index>(rows.size()));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                resp(static_cast<Eigen::Index>(r)) = z[r];
                wts(static_cast<Eigen::Index>(r)) = w[r];
                offs(static_cast<Eigen::Index>(r)) = detail::clamped_logit(q_t[rows[r]]);
            }
            auto fluct = fit_logistic(ones, resp, wts, offs);
            if (fluct.converged && !fluct.separated) {
                stage.epsilon = fluct.beta(0);
                for (std::size_t i = 0; i < n; ++i)
                    q_t[i] = expit(detail::clamped_logit(q_t[i]) + stage.epsilon);
            } else {
                stage.fallback = true;
                any_fallback = true;
            }

            for (std::size_t r = 0; r < rows.size(); ++r)
                ic[rows[r]] += w[r] * (z[r] - q_t[rows[r]]);
        }

        detail.stages.push_back(stage);
        q_next = std::move(q_t);
    }

    double phi = 0.0;  // event probability under the regime
    for (double q : q_next) phi += q;
    phi /= static_cast<double>(n);

    EstimateResult res;
    res.estimand = "survival_at_" + std::to_string(horizon);
    res.method = targeted ? "tmle" : "gcomp";
    res.point = 1.0 - phi;
    res.n_used = static_cast<int>(n);

    if (targeted) {
        double ssq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = ic[i] + q_next[i] - phi;
            ssq += v * v;
        }
        res.se = std::sqrt(ssq) / static_cast<double>(n);
        res.finalize_ci();
        if (any_fallback)
            res.warnings.push_back("fluctuation did not converge at some stage; left untargeted");
    }

    if (detail_out) {
        detail.q1 = q_next;
        *detail_out = std::move(detail);
    }
    return res;
}

inline EstimateResult seq_gcomp(const TrialDataset& ds, const RegimeSpec& regime,
                                const GcompOptions& opts = {}, GcompDetail* detail_out = nullptr) {
    EstimateResult res = sequential_survival(ds, regime, false, opts, detail_out);
    if (opts.bootstrap_b > 0) {
        GcompOptions inner = opts;
        inner.bootstrap_b = 0;
        auto boot = bootstrap_se(
            ds,
            [&](const TrialDataset& rep) {
                return sequential_survival(rep, regime, false, inner).point;
            },
            opts.bootstrap_b, opts.bootstrap_seed);
        res.se = boot.se;
        res.ci95 = boot.ci95;
        if (boot.replicates_failed > 0)
            res.warnings.push_back(std::to_string(boot.replicates_failed) +
                                   " bootstrap replicates failed and were excluded");
    }
    return res;
}

inline EstimateResult targeted_update(const TrialDataset& ds, const RegimeSpec& regime,
                                      const GcompOptions& opts = {},
                                      GcompDetail* detail_out = nullptr) {
    return sequential_survival(ds, regime, true, opts, detail_out);
}

}  // namespace tte
