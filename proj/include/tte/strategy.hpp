#pragma once

// The six intercurrent-event handling strategies as explicit rewrites of the
// A/C/Y node structure, plus the plan composer for trials with several ICE
// kinds. All rewrites are pure: subjects without a matching ICE come out
// byte-identical.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "tte/errors.hpp"
#include "tte/trial_data.hpp"

namespace tte {

struct IceRecord {
    std::string subject_id;
    std::string kind;   // e.g. "discontinuation", "rescue", "death-other-cause"
    int month = 1;      // 1..K
    bool terminal = false;
};

using IceRecords = std::vector<IceRecord>;

enum class Strategy {
    composite,
    treatment_policy,
    hypothetical,
    while_on_treatment_alt1,  // MI recipe; the engine censors and tags cells
    while_on_treatment_alt2,  // analyze a (1,..,1,0,..,0) regime; no rewrite
    competing_risk,
    principal_stratum,        // oracle-only estimand; no rewrite
};

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::composite: return "composite";
        case Strategy::treatment_policy: return "treatment_policy";
        case Strategy::hypothetical: return "hypothetical";
        case Strategy::while_on_treatment_alt1: return "while_on_treatment_alt1";
        case Strategy::while_on_treatment_alt2: return "while_on_treatment_alt2";
        case Strategy::competing_risk: return "competing_risk";
        case Strategy::principal_stratum: return "principal_stratum";
    }
    return "?";
}

struct StrategyPlan {
    // Applied in declared order.
    std::vector<std::pair<std::string, Strategy>> entries;

    std::optional<Strategy> strategy_for(const std::string& kind) const {
        for (const auto& [k, s] : entries)
            if (k == kind) return s;
        return std::nullopt;
    }

    void check() const {
        std::set<std::string> kinds;
        for (const auto& [k, s] : entries) {
            (void)s;
            if (!kinds.insert(k).second)
                throw PlanError("ICE kind '" + k + "' mapped more than once");
        }
    }
};

struct RegimeSpec {
    std::vector<TreatCode> abar;

    static RegimeSpec constant(TreatCode code, int k) {
        return RegimeSpec{std::vector<TreatCode>(static_cast<std::size_t>(k), code)};
    }
};

// Regime (1,..,1,0,..,0) with k leading ones.
inline RegimeSpec make_regime_while_on_treatment(int k_on, const Timeline& timeline) {
    if (k_on < 0 || k_on > timeline.k)
        throw DomainError("while-on-treatment regime: k must lie in 0..K");
    RegimeSpec r;
    r.abar.assign(static_cast<std::size_t>(timeline.k), TreatCode{0});
    std::fill_n(r.abar.begin(), k_on, TreatCode{1});
    return r;
}

// Two-dimensional absorbing outcome: primary event and competing event can
// never both be 1; whichever fires first freezes the other at 0.
struct CompetingSubject {
    std::string id;
    std::vector<double> w;
    std::vector<TreatCode> a;
    std::vector<Censor> c;
    std::vector<Outcome> y_pe;
    std::vector<Outcome> y_ce;
    std::vector<LCell> l;

    bool operator==(const CompetingSubject&) const = default;
};

struct CompetingDataset {
    Timeline timeline;
    std::vector<CompetingSubject> subjects;
    std::vector<std::string> covariate_names;
    std::vector<std::string> l_covariate_names;

    bool operator==(const CompetingDataset&) const = default;
};

inline std::vector<Violation> validate_competing(const CompetingDataset& ds) {
    std::vector<Violation> out;
    const int k = ds.timeline.k;
    for (const auto& rec : ds.subjects) {
        if (static_cast<int>(rec.y_pe.size()) != k || static_cast<int>(rec.y_ce.size()) != k ||
            static_cast<int>(rec.c.size()) != k) {
            out.push_back({rec.id, 0, "length-mismatch", "sequence lengths do not match the timeline"});
            continue;
        }
        bool pe_seen = false, ce_seen = false;
        for (int i = 0; i < k; ++i) {
            if (rec.y_pe[i] == Outcome::yes && rec.y_ce[i] == Outcome::yes)
                out.push_back({rec.id, i + 1, "mutual-exclusion", "both causes marked at once"});
            if (pe_seen && rec.y_pe[i] != Outcome::yes)
                out.push_back({rec.id, i + 1, "outcome-monotone", "primary event reverts"});
            if (ce_seen && rec.y_ce[i] != Outcome::yes)
                out.push_back({rec.id, i + 1, "outcome-monotone", "competing event reverts"});
            if (pe_seen && rec.y_ce[i] == Outcome::yes)
                out.push_back({rec.id, i + 1, "mutual-exclusion", "competing event after primary event"});
            if (ce_seen && rec.y_pe[i] == Outcome::yes)
                out.push_back({rec.id, i + 1, "mutual-exclusion", "primary event after competing event"});
            if (rec.y_pe[i] == Outcome::yes) pe_seen = true;
            if (rec.y_ce[i] == Outcome::yes) ce_seen = true;

            const bool na = rec.y_pe[i] == Outcome::na;
            const bool na_ce = rec.y_ce[i] == Outcome::na;
            const bool cens = rec.c[i] == Censor::censored;
            if (na != cens || na_ce != cens)
                out.push_back({rec.id, i + 1, "missing-iff-censored",
                               "NA pattern disagrees with censoring marks"});
        }
        bool cens_seen = false;
        for (int i = 0; i < k; ++i) {
            if (cens_seen && rec.c[i] != Censor::censored)
                out.push_back({rec.id, i + 1, "censor-absorbing", "censoring mark reverts"});
            if (rec.c[i] == Censor::censored) cens_seen = true;
        }
    }
    return out;
}

namespace detail {

inline std::map<std::string, int> earliest_ice_by_subject(const IceRecords& ices,
                                                          const std::string& kind) {
    std::map<std::string, int> out;
    for (const auto& r : ices) {
        if (r.kind != kind) continue;
        auto [it, fresh] = out.emplace(r.subject_id, r.month);
        if (!fresh) it->second = std::min(it->second, r.month);
    }
    return out;
}

inline bool ice_terminal(const IceRecords& ices, const std::string& kind) {
    bool any = false, all = true;
    for (const auto& r : ices)
        if (r.kind == kind) {
            any = true;
            all = all && r.terminal;
        }
    return any && all;
}

}  // namespace detail

// Composite variable strategy: the outcome becomes time to the first of the
// primary event or the ICE. Ties at the same month count as the event.
inline TrialDataset apply_composite(const TrialDataset& ds, const IceRecords& ices,
                                    const std::string& kind) {
    auto months = detail::earliest_ice_by_subject(ices, kind);
    std::map<std::string, bool> terminal;
    for (const auto& r : ices)
        if (r.kind == kind) terminal[r.subject_id] = terminal[r.subject_id] || r.terminal;

    TrialDataset out = ds;
    for (auto& rec : out.subjects) {
        auto it = months.find(rec.id);
        if (it == months.end()) continue;
        const int m = it->second;
        if (m < 1 || m > ds.timeline.k)
            throw PlanError("ICE month out of range for subject '" + rec.id + "'");

        auto event = rec.first_event_month();
        if (event && *event <= m) continue;  // primary event fired first

        auto cens = rec.first_censored_index();
        if (cens && m > *cens + 1) {
            // ICE strictly inside the censored stretch. Terminal events are
            // known from registries even after dropout; the earlier
            // censoring is kept. Non-terminal ones cannot have been observed.
            if (terminal[rec.id]) continue;
            throw ConventionConflictError(rec.id, m, "non-terminal ICE recorded after censoring");
        }

        for (int t = m; t <= ds.timeline.k; ++t) rec.y[t - 1] = Outcome::yes;
        sync_censor_marks(rec);  // clears marks after the composite event
    }
    return out;
}

// Treatment policy strategy: the ICE is irrelevant to the estimand, so
// treatment codes that drifted away from the initial assignment at or after
// the ICE are rewritten back. Y and C stay untouched.
inline TrialDataset apply_treatment_policy(const TrialDataset& ds, const IceRecords& ices,
                                           const std::string& kind) {
    auto months = detail::earliest_ice_by_subject(ices, kind);
    TrialDataset out = ds;
    for (auto& rec : out.subjects) {
        auto it = months.find(rec.id);
        if (it == months.end()) continue;
        const TreatCode initial = rec.a[0];
        for (int u = it->second; u < ds.timeline.k; ++u)
            if (rec.a[u] != initial) rec.a[u] = initial;
    }
    return out;
}

// Hypothetical strategy: envisage the ICE never occurring; equivalent to
// censoring the subject from the ICE month onward.
inline TrialDataset apply_hypothetical(const TrialDataset& ds, const IceRecords& ices,
                                       const std::string& kind) {
    auto months = detail::earliest_ice_by_subject(ices, kind);
    TrialDataset out = ds;
    for (auto& rec : out.subjects) {
        auto it = months.find(rec.id);
        if (it == months.end()) continue;
        const int m = it->second;

        auto event = rec.first_event_month();
        if (event && *event < m) continue;  // outcome already observed before the ICE

        for (int t = m; t <= ds.timeline.k; ++t) {
            rec.y[t - 1] = Outcome::na;
            if (t - 1 < static_cast<int>(rec.l.size())) rec.l[t - 1] = std::nullopt;
        }
        sync_censor_marks(rec);
    }
    return out;
}

// Competing risk strategy: the terminal ICE becomes a second absorbing cause.
inline CompetingDataset apply_competing_risk(const TrialDataset& ds, const IceRecords& ices,
                                             const std::vector<std::string>& kinds) {
    std::map<std::string, int> ce_month;
    for (const auto& kind : kinds) {
        for (const auto& r : ices)
            if (r.kind == kind && !r.terminal)
                throw PlanError("competing-risk strategy requires terminal ICEs; kind '" + kind +
                                "' has a non-terminal record");
        for (const auto& [id, m] : detail::earliest_ice_by_subject(ices, kind)) {
            auto [it, fresh] = ce_month.emplace(id, m);
            if (!fresh) it->second = std::min(it->second, m);
        }
    }

    CompetingDataset out;
    out.timeline = ds.timeline;
    out.covariate_names = ds.covariate_names;
    out.l_covariate_names = ds.l_covariate_names;
    out.subjects.reserve(ds.subjects.size());

    for (const auto& rec : ds.subjects) {
        CompetingSubject cs;
        cs.id = rec.id;
        cs.w = rec.w;
        cs.a = rec.a;
        cs.c = rec.c;
        cs.l = rec.l;
        cs.y_pe = rec.y;
        cs.y_ce.assign(rec.y.size(), Outcome::no);
        for (std::size_t i = 0; i < rec.y.size(); ++i)
            if (rec.y[i] == Outcome::na) cs.y_ce[i] = Outcome::na;

        auto it = ce_month.find(rec.id);
        if (it != ce_month.end()) {
            const int m = it->second;
            if (m < 1 || m > ds.timeline.k)
                throw PlanError("ICE month out of range for subject '" + rec.id + "'");
            auto event = rec.first_event_month();
            auto cens = rec.first_censored_index();
            const bool pe_first = event && *event <= m;           // PE wins ties
            const bool censored_first = cens && m > *cens + 1;    // keep strictly earlier censoring
            if (!pe_first && !censored_first) {
                for (int t = m; t <= ds.timeline.k; ++t) {
                    cs.y_ce[t - 1] = Outcome::yes;
                    cs.y_pe[t - 1] = Outcome::no;  // precluded
                }
                for (int i = 0; i < ds.timeline.k; ++i) cs.c[i] = Censor::uncensored;
            }
        }
        out.subjects.push_back(std::move(cs));
    }
    return out;
}

inline CompetingDataset apply_competing_risk(const TrialDataset& ds, const IceRecords& ices,
                                             const std::string& kind) {
    return apply_competing_risk(ds, ices, std::vector<std::string>{kind});
}

using AnyDataset = std::variant<TrialDataset, CompetingDataset>;

struct TransformResult {
    AnyDataset dataset;
    // Subjects whose censoring was introduced by a censor-style strategy,
    // keyed to the ICE kind responsible. Consumed by the combined-MI recipe.
    std::map<std::string, std::string> censor_attribution;
    std::vector<std::string> notes;
};

// Applies a multi-ICE plan in declared order. Every ICE kind present in the
// data must be mapped. Competing-risk entries switch the running dataset to
// the two-cause form; only treatment-policy and hypothetical entries may
// follow them.
inline TransformResult compose_plan(const TrialDataset& ds, const IceRecords& ices,
                                    const StrategyPlan& plan) {
    plan.check();
    std::set<std::string> kinds_present;
    for (const auto& r : ices) kinds_present.insert(r.kind);
    for (const auto& kind : kinds_present)
        if (!plan.strategy_for(kind))
            throw PlanError("plan incomplete: ICE kind '" + kind + "' is not mapped");

    TransformResult result{AnyDataset{ds}, {}, {}};

    std::vector<std::string> cr_kinds;
    for (const auto& [kind, strat] : plan.entries)
        if (strat == Strategy::competing_risk) cr_kinds.push_back(kind);

    bool cr_applied = false;
    for (const auto& [kind, strat] : plan.entries) {
        switch (strat) {
            case Strategy::composite: {
                if (cr_applied)
                    throw PlanError("composite entries must precede competing-risk entries");
                auto& cur = std::get<TrialDataset>(result.dataset);
                result.dataset = apply_composite(cur, ices, kind);
                break;
            }
            case Strategy::treatment_policy: {
                if (auto* cur = std::get_if<TrialDataset>(&result.dataset)) {
                    result.dataset = apply_treatment_policy(*cur, ices, kind);
                } else {
                    auto& cds = std::get<CompetingDataset>(result.dataset);
                    auto months = detail::earliest_ice_by_subject(ices, kind);
                    for (auto& rec : cds.subjects) {
                        auto it = months.find(rec.id);
                        if (it == months.end()) continue;
                        const TreatCode initial = rec.a[0];
                        for (int u = it->second; u < cds.timeline.k; ++u)
                            if (rec.a[u] != initial) rec.a[u] = initial;
                    }
                }
                break;
            }
            case Strategy::while_on_treatment_alt1:
            case Strategy::hypothetical: {
                auto months = detail::earliest_ice_by_subject(ices, kind);
                if (auto* cur = std::get_if<TrialDataset>(&result.dataset)) {
                    // Record which subjects this entry newly censors, for MI.
                    for (const auto& [id, m] : months) {
                        const auto* rec = cur->find(id);
                        if (!rec) continue;
                        auto event = rec->first_event_month();
                        auto cens = rec->first_censored_index();
                        if (event && *event < m) continue;
                        if (cens && *cens + 1 <= m) continue;  // already censored earlier
                        result.censor_attribution[id] = kind;
                    }
                    result.dataset = apply_hypothetical(*cur, ices, kind);
                } else {
                    auto& cds = std::get<CompetingDataset>(result.dataset);
                    for (auto& rec : cds.subjects) {
                        auto it = months.find(rec.id);
                        if (it == months.end()) continue;
                        const int m = it->second;
                        bool resolved = false;  // either cause already fired before m
                        for (int t = 1; t < m; ++t)
                            resolved = resolved || rec.y_pe[t - 1] == Outcome::yes ||
                                       rec.y_ce[t - 1] == Outcome::yes;
                        if (resolved) continue;
                        bool was_censored_before = rec.c[m - 1] == Censor::censored;
                        for (int t = m; t <= cds.timeline.k; ++t) {
                            rec.y_pe[t - 1] = Outcome::na;
                            rec.y_ce[t - 1] = Outcome::na;
                            rec.c[t - 1] = Censor::censored;
                            if (t - 1 < static_cast<int>(rec.l.size())) rec.l[t - 1] = std::nullopt;
                        }
                        if (!was_censored_before) result.censor_attribution[rec.id] = kind;
                    }
                }
                if (strat == Strategy::while_on_treatment_alt1)
                    result.notes.push_back("kind '" + kind +
                                           "' censored for the combined-MI while-on-treatment recipe");
                break;
            }
            case Strategy::competing_risk: {
                if (cr_applied) break;  // all competing kinds were folded in at the first entry
                auto& cur = std::get<TrialDataset>(result.dataset);
                result.dataset = apply_competing_risk(cur, ices, cr_kinds);
                cr_applied = true;
                break;
            }
            case Strategy::while_on_treatment_alt2:
                result.notes.push_back("kind '" + kind +
                                       "' handled through the regime definition; data unchanged");
                break;
            case Strategy::principal_stratum:
                result.notes.push_back("kind '" + kind +
                                       "' targets a principal-stratum estimand; data unchanged");
                break;
        }
    }
    return result;
}

// Default ordering when the user does not declare one: terminal strategies
// first, then treatment policy, then censor-style strategies.
inline StrategyPlan order_default(const std::vector<std::pair<std::string, Strategy>>& entries) {
    auto rank = [](Strategy s) {
        switch (s) {
            case Strategy::composite: return 0;
            case Strategy::competing_risk: return 1;
            case Strategy::treatment_policy: return 2;
            case Strategy::hypothetical: return 3;
            case Strategy::while_on_treatment_alt1: return 4;
            default: return 5;
        }
    };
    StrategyPlan plan{entries};
    std::stable_sort(plan.entries.begin(), plan.entries.end(),
                     [&](const auto& x, const auto& y) { return rank(x.second) < rank(y.second); });
    return plan;
}

}  // namespace tte
