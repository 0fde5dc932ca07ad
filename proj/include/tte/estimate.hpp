#pragma once

// Weighting-based estimation: censoring-hazard models, inverse-probability-
// of-censoring-weighted survival, regime contrasts, and a subject-resampling
// bootstrap. The sequential-regression estimators live in gcomp.hpp.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tte/design.hpp"
#include "tte/errors.hpp"
#include "tte/logistic.hpp"
#include "tte/rng.hpp"
#include "tte/stats.hpp"
#include "tte/strategy.hpp"
#include "tte/survival.hpp"
#include "tte/trial_data.hpp"

namespace tte {

struct EstimateResult {
    std::string estimand;
    std::string method;
    double point = 0.0;
    std::optional<double> se;
    std::optional<std::pair<double, double>> ci95;
    int n_used = 0;
    std::vector<std::string> warnings;

    void finalize_ci() {
        if (se && !ci95) {
            const double z = normal_quantile(0.975);
            ci95 = {point - z * *se, point + z * *se};
        }
    }
};

inline bool follows_regime(const SubjectRecord& rec, const RegimeSpec& regime, int through) {
    for (int u = 0; u < through; ++u)
        if (rec.a[u] != regime.abar[static_cast<std::size_t>(u)]) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Censoring-hazard models

enum class CensorModelKind {
    saturated,    // empirical rate per (node, arm); exact IPCW-KM identity
    logistic_w,   // per (node, arm) logistic on baseline terms
};

struct CensorModelOptions {
    CensorModelKind kind = CensorModelKind::saturated;
    std::vector<std::string> terms;  // defaults to all W names for logistic_w
    double floor = 0.01;             // lower bound on P(uncensored at a node)
};

// In the node order C(u) precedes Y(u+1): a subject is in the censoring risk
// set at node u while uncensored through C(u-1) and event-free through Y(u).
inline bool censor_at_risk(const SubjectRecord& rec, int u) {
    if (u > 0 && rec.c[u - 1] == Censor::censored) return false;
    return u == 0 || rec.y[u - 1] == Outcome::no;
}

// p_unc(i, u) = estimated P(C(u) = uncensored | history) for subjects in the
// node-u censoring risk set; cells outside the risk set stay at 1 (they are
// never multiplied into any weight).
struct CensorProbabilities {
    std::vector<std::vector<double>> p_unc;  // [subject][node u = 0..K-1]
    bool floored = false;                    // some probability hit the floor
};

inline CensorProbabilities censor_probabilities(const TrialDataset& ds,
                                                const CensorModelOptions& opts) {
    const int k = ds.timeline.k;
    const std::size_t n = ds.subjects.size();
    CensorProbabilities out;
    out.p_unc.assign(n, std::vector<double>(static_cast<std::size_t>(k), 1.0));

    std::map<TreatCode, std::vector<std::size_t>> by_arm;
    for (std::size_t i = 0; i < n; ++i) by_arm[ds.subjects[i].a[0]].push_back(i);

    std::vector<Term> terms;
    if (opts.kind == CensorModelKind::logistic_w) {
        terms = opts.terms.empty() ? linear_terms(ds.covariate_names)
                                   : parse_terms(opts.terms, ds.covariate_names);
    }

    auto clamp = [&](double p) {
        if (p < opts.floor) {
            out.floored = true;
            return opts.floor;
        }
        return p;
    };

    for (auto& [arm, members] : by_arm) {
        (void)arm;
        for (int u = 0; u < k; ++u) {
            std::vector<std::size_t> risk;
            int n_cens = 0;
            for (std::size_t i : members) {
                const auto& rec = ds.subjects[i];
                if (!censor_at_risk(rec, u)) continue;
                risk.push_back(i);
                if (rec.c[u] == Censor::censored) ++n_cens;
            }
            if (risk.empty()) continue;

            if (opts.kind == CensorModelKind::saturated || n_cens == 0 ||
                n_cens == static_cast<int>(risk.size())) {
                const double p =
                    1.0 - static_cast<double>(n_cens) / static_cast<double>(risk.size());
                for (std::size_t i : risk) out.p_unc[i][static_cast<std::size_t>(u)] = clamp(p);
                continue;
            }

            const Eigen::Index rows = static_cast<Eigen::Index>(risk.size());
            const Eigen::Index cols = 1 + static_cast<Eigen::Index>(terms.size());
            Eigen::MatrixXd x(rows, cols);
            Eigen::VectorXd y(rows);
            for (Eigen::Index r = 0; r < rows; ++r) {
                const auto& rec = ds.subjects[risk[static_cast<std::size_t>(r)]];
                x(r, 0) = 1.0;
                for (std::size_t j = 0; j < terms.size(); ++j)
                    x(r, 1 + static_cast<Eigen::Index>(j)) = terms[j].value(rec.w);
                y(r) = rec.c[u] == Censor::censored ? 1.0 : 0.0;
            }
            try {
                auto keep = nonconstant_columns(x, Eigen::VectorXd::Ones(rows));
                auto fit = fit_logistic(select_columns(x, keep), y, Eigen::VectorXd::Ones(rows));
                for (Eigen::Index r = 0; r < rows; ++r) {
                    Eigen::RowVectorXd xr = select_columns(x, keep).row(r);
                    const double p = 1.0 - fit.predict(xr);
                    out.p_unc[risk[static_cast<std::size_t>(r)]][static_cast<std::size_t>(u)] =
                        clamp(p);
                }
            } catch (const SingularDesignError&) {
                const double p =
                    1.0 - static_cast<double>(n_cens) / static_cast<double>(risk.size());
                for (std::size_t i : risk) out.p_unc[i][static_cast<std::size_t>(u)] = clamp(p);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// IPCW survival

struct IpcwOptions {
    CensorModelOptions censor;
    int horizon = 0;  // 0 means K
};

struct IpcwDiagnostics {
    double weight_min = 0.0;
    double weight_max = 0.0;
    double weight_sum = 0.0;
    bool truncated = false;
};

// Hajek-weighted survival at t*: mean of 1{Y(t*) = 0} over regime followers
// observed at t*, each weighted by the inverse product of uncensored
// probabilities over the nodes where the subject was still censorable.
inline EstimateResult ipcw_survival(const TrialDataset& ds, const RegimeSpec& regime,
                                    const IpcwOptions& opts = {},
                                    IpcwDiagnostics* diag = nullptr) {
    const int k = ds.timeline.k;
    if (static_cast<int>(regime.abar.size()) != k)
        throw DomainError("ipcw: regime length must equal K");
    const int horizon = opts.horizon > 0 ? opts.horizon : k;
    if (horizon < 1 || horizon > k) throw DomainError("ipcw: horizon outside 1..K");

    const auto probs = censor_probabilities(ds, opts.censor);

    double sum_w = 0.0, sum_wz = 0.0;
    double wmin = std::numeric_limits<double>::infinity(), wmax = 0.0;
    int n_used = 0;
    std::vector<std::pair<double, double>> used;  // (weight, z)

    for (std::size_t i = 0; i < ds.subjects.size(); ++i) {
        const auto& rec = ds.subjects[i];
        if (rec.c[horizon - 1] == Censor::censored) continue;  // not observed at t*

        const auto event = rec.first_event_month();
        const int censorable_through = event ? std::min(*event, horizon) : horizon;
        if (!follows_regime(rec, regime, censorable_through)) continue;

        double w = 1.0;
        for (int u = 0; u < censorable_through; ++u)
            w /= probs.p_unc[i][static_cast<std::size_t>(u)];

        const double z = rec.y[horizon - 1] == Outcome::no ? 1.0 : 0.0;
        sum_w += w;
        sum_wz += w * z;
        wmin = std::min(wmin, w);
        wmax = std::max(wmax, w);
        ++n_used;
        used.emplace_back(w, z);
    }

    if (n_used == 0)
        throw IdentifiabilityError(horizon, "no uncensored regime-following subjects at the horizon");

    EstimateResult res;
    res.estimand = "survival_at_" + std::to_string(horizon);
    res.method = "ipcw";
    res.point = sum_wz / sum_w;
    res.n_used = n_used;

    // Linearization of the weighted ratio, weights treated as known.
    double var = 0.0;
    for (const auto& [w, z] : used) {
        const double d = w * (z - res.point);
        var += d * d;
    }
    res.se = std::sqrt(var) / sum_w;
    res.finalize_ci();

    if (probs.floored) res.warnings.push_back("censoring probabilities truncated at the floor");
    if (diag) {
        diag->weight_min = wmin;
        diag->weight_max = wmax;
        diag->weight_sum = sum_w;
        diag->truncated = probs.floored;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Contrast and bootstrap

// Survival-scale difference: regime-1 survival minus regime-0 survival.
inline EstimateResult contrast(const EstimateResult& e1, const EstimateResult& e0) {
    EstimateResult res;
    res.estimand = e1.estimand + "_minus_" + e0.estimand;
    res.method = e1.method == e0.method ? e1.method : e1.method + "/" + e0.method;
    res.point = e1.point - e0.point;
    res.n_used = e1.n_used + e0.n_used;
    if (e1.se && e0.se) {
        res.se = std::sqrt(*e1.se * *e1.se + *e0.se * *e0.se);
        res.finalize_ci();
    }
    for (const auto& w : e1.warnings) res.warnings.push_back(w);
    for (const auto& w : e0.warnings) res.warnings.push_back(w);
    return res;
}

struct BootstrapResult {
    double se = 0.0;
    std::pair<double, double> ci95{0.0, 0.0};
    int replicates_requested = 0;
    int replicates_failed = 0;
};

// Subject-level resampling with replacement; replicate r draws from the
// stream mix_seed(seed, r), so results are reproducible and independent of
// evaluation order.
inline BootstrapResult bootstrap_se(const TrialDataset& ds,
                                    const std::function<double(const TrialDataset&)>& estimator,
                                    int b = 500, std::uint64_t seed = 1) {
    if (b < 2) throw DomainError("bootstrap: need at least 2 replicates");
    if (ds.subjects.empty()) throw DomainError("bootstrap: empty dataset");

    BootstrapResult out;
    out.replicates_requested = b;
    std::vector<double> points;
    points.reserve(static_cast<std::size_t>(b));

    const std::size_t n = ds.subjects.size();
    for (int r = 0; r < b; ++r) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        TrialDataset rep;
        rep.timeline = ds.timeline;
        rep.covariate_names = ds.covariate_names;
        rep.l_covariate_names = ds.l_covariate_names;
        rep.treatment_labels = ds.treatment_labels;
        rep.subjects.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto rec = ds.subjects[rng.integer(n)];
            rec.id += "#" + std::to_string(i);  // keep ids unique in the replicate
            rep.subjects.push_back(std::move(rec));
        }
        try {
            points.push_back(estimator(rep));
        } catch (const Error&) {
            ++out.replicates_failed;
        }
    }
    if (points.size() < 2)
        throw DomainError("bootstrap: fewer than 2 successful replicates");

    out.se = std::sqrt(sample_variance(points));
    out.ci95 = {quantile_type7(points, 0.025), quantile_type7(points, 0.975)};
    return out;
}

}  // namespace tte
