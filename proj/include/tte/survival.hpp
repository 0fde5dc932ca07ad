#pragma once

// Nonparametric curves on the discrete follow-up grid: Kaplan-Meier for a
// single absorbing outcome and the Aalen-Johansen cumulative incidences for
// the two-cause form. Both read the encoded sequences directly; subjects
// enter the month-t risk set while uncensored and event-free through t-1.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "tte/errors.hpp"
#include "tte/strategy.hpp"
#include "tte/trial_data.hpp"

namespace tte {

struct KmCurve {
    std::vector<int> at_risk;        // n_t, index t-1
    std::vector<int> events;         // d_t
    std::vector<int> censored;       // newly censored going into month t+1
    std::vector<double> survival;    // S(t)
    std::vector<double> greenwood_se;

    double survival_at(int t) const {
        if (t == 0) return 1.0;
        if (t < 1 || t > static_cast<int>(survival.size()))
            throw DomainError("survival_at: month outside the computed range");
        return survival[static_cast<std::size_t>(t - 1)];
    }
};

inline KmCurve km_curve(const TrialDataset& ds, std::optional<TreatCode> arm = std::nullopt,
                        std::optional<int> t_max = std::nullopt) {
    const int k = ds.timeline.k;
    const int horizon = t_max.value_or(k);
    if (horizon < 1 || horizon > k) throw DomainError("km_curve: horizon outside 1..K");

    bool any = false;
    for (const auto& rec : ds.subjects) any = any || !arm || rec.a[0] == *arm;
    if (!any) throw DomainError("km_curve: no subjects in the requested arm");

    KmCurve curve;
    curve.at_risk.assign(horizon, 0);
    curve.events.assign(horizon, 0);
    curve.censored.assign(horizon, 0);
    curve.survival.assign(horizon, 0.0);
    curve.greenwood_se.assign(horizon, 0.0);

    double s = 1.0;
    double gw = 0.0;  // running Greenwood sum
    for (int t = 1; t <= horizon; ++t) {
        int n = 0, d = 0, cens = 0;
        for (const auto& rec : ds.subjects) {
            if (arm && rec.a[0] != *arm) continue;
            if (!at_risk(rec, t)) continue;
            ++n;
            if (rec.y[t - 1] == Outcome::yes) {
                ++d;
            } else if (t < k && rec.c[t] == Censor::censored) {
                ++cens;
            }
        }
        curve.at_risk[t - 1] = n;
        curve.events[t - 1] = d;
        curve.censored[t - 1] = cens;
        if (n > 0) {
            s *= 1.0 - static_cast<double>(d) / static_cast<double>(n);
            if (n > d) gw += static_cast<double>(d) / (static_cast<double>(n) * (n - d));
        }
        curve.survival[t - 1] = s;
        curve.greenwood_se[t - 1] = s * std::sqrt(gw);
    }
    return curve;
}

struct AjCurve {
    std::vector<int> at_risk;
    std::vector<int> events_pe;
    std::vector<int> events_ce;
    std::vector<double> survival;  // overall event-free probability
    std::vector<double> cif_pe;    // P(primary event by t)
    std::vector<double> cif_ce;    // P(competing event by t)
    std::vector<std::string> warnings;

    double survival_at(int t) const {
        if (t == 0) return 1.0;
        if (t < 1 || t > static_cast<int>(survival.size()))
            throw DomainError("survival_at: month outside the computed range");
        return survival[static_cast<std::size_t>(t - 1)];
    }
};

inline bool competing_at_risk(const CompetingSubject& rec, int t) {
    if (rec.c[t - 1] == Censor::censored) return false;
    if (t == 1) return true;
    return rec.y_pe[t - 2] == Outcome::no && rec.y_ce[t - 2] == Outcome::no;
}

// Event-free survival by the product over the all-cause hazard; the
// competing-cause incidence by its increment sum; the primary-cause
// incidence as the remainder, so the three always partition 1.
inline AjCurve aalen_johansen(const CompetingDataset& ds,
                              std::optional<TreatCode> arm = std::nullopt,
                              std::optional<int> t_max = std::nullopt) {
    const int k = ds.timeline.k;
    const int horizon = t_max.value_or(k);
    if (horizon < 1 || horizon > k) throw DomainError("aalen_johansen: horizon outside 1..K");

    AjCurve curve;
    curve.at_risk.assign(horizon, 0);
    curve.events_pe.assign(horizon, 0);
    curve.events_ce.assign(horizon, 0);
    curve.survival.assign(horizon, 0.0);
    curve.cif_pe.assign(horizon, 0.0);
    curve.cif_ce.assign(horizon, 0.0);

    double s_prev = 1.0;
    double cif_ce = 0.0;
    for (int t = 1; t <= horizon; ++t) {
        int n = 0, d_pe = 0, d_ce = 0;
        for (const auto& rec : ds.subjects) {
            if (arm && rec.a[0] != *arm) continue;
            if (!competing_at_risk(rec, t)) continue;
            ++n;
            if (rec.y_pe[t - 1] == Outcome::yes) ++d_pe;
            if (rec.y_ce[t - 1] == Outcome::yes) ++d_ce;
        }
        curve.at_risk[t - 1] = n;
        curve.events_pe[t - 1] = d_pe;
        curve.events_ce[t - 1] = d_ce;

        double s = s_prev;
        if (n > 0) {
            s = s_prev * (1.0 - static_cast<double>(d_pe + d_ce) / static_cast<double>(n));
            cif_ce += s_prev * (static_cast<double>(d_ce) / static_cast<double>(n));
        } else if (curve.warnings.empty()) {
            curve.warnings.push_back("risk set empty at month " + std::to_string(t) +
                                     "; curves held flat from there");
        }
        curve.survival[t - 1] = s;
        curve.cif_ce[t - 1] = cif_ce;
        curve.cif_pe[t - 1] = 1.0 - s - cif_ce;
        s_prev = s;
    }
    return curve;
}

}  // namespace tte
