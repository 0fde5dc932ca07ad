#pragma once

// Estimand specification: a population summary, one or two treatment
// regimes, a horizon, and the ICE-handling plan that defines the analysis
// dataset. The five-attribute description collapses to these fields once the
// population and variable are fixed by the dataset itself.

#include <string>
#include <vector>

#include "tte/errors.hpp"
#include "tte/strategy.hpp"
#include "tte/trial_data.hpp"

namespace tte {

enum class SummaryKind { survival_at_k, survival_difference, cif_at_k, sace_oracle };

inline const char* summary_name(SummaryKind s) {
    switch (s) {
        case SummaryKind::survival_at_k: return "SURVIVAL_AT_K";
        case SummaryKind::survival_difference: return "SURVIVAL_DIFFERENCE";
        case SummaryKind::cif_at_k: return "CIF_AT_K";
        case SummaryKind::sace_oracle: return "SACE_ORACLE";
    }
    return "?";
}

inline SummaryKind parse_summary(const std::string& text) {
    if (text == "SURVIVAL_AT_K") return SummaryKind::survival_at_k;
    if (text == "SURVIVAL_DIFFERENCE") return SummaryKind::survival_difference;
    if (text == "CIF_AT_K") return SummaryKind::cif_at_k;
    if (text == "SACE_ORACLE") return SummaryKind::sace_oracle;
    throw DomainError("unknown summary '" + text + "'");
}

struct EstimandSpec {
    SummaryKind summary = SummaryKind::survival_at_k;
    std::vector<RegimeSpec> regimes;  // one, or two for contrasts
    int horizon = 1;                  // t* <= K
    StrategyPlan plan;

    void check(const Timeline& timeline) const {
        const bool two = summary == SummaryKind::survival_difference ||
                         summary == SummaryKind::sace_oracle;
        if (two && regimes.size() != 2)
            throw DomainError("estimand: this summary requires exactly two regimes");
        if (!two && regimes.size() != 1)
            throw DomainError("estimand: this summary requires exactly one regime");
        if (horizon < 1 || horizon > timeline.k)
            throw DomainError("estimand: horizon outside 1..K");
        for (const auto& regime : regimes)
            if (static_cast<int>(regime.abar.size()) != timeline.k)
                throw DomainError("estimand: regime length must equal K");
        plan.check();
    }
};

}  // namespace tte
