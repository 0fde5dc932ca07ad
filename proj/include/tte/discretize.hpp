#pragma once

// Rounds continuous event/censoring/ICE times up to whole follow-up periods
// and emits the discrete outcome row. Ties between an event and censoring that
// land in the same period count as the event.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "tte/errors.hpp"
#include "tte/trial_data.hpp"

namespace tte {

struct EventTimes {
    double time_to_event = 0;     // months (or the configured unit)
    double time_to_censoring = 0;
    std::optional<double> time_to_ice;
};

struct DiscretizedRow {
    int observed = 0;             // 1..K+1; K+1 means alive and uncensored through K
    bool event = false;
    std::vector<Outcome> row;     // length K
};

namespace detail {

inline int ceil_month(double x, const char* what) {
    if (!(x > 0.0)) throw DomainError(std::string(what) + " must be positive");
    return static_cast<int>(std::ceil(x));
}

}  // namespace detail

inline DiscretizedRow discretize_subject(const Timeline& timeline, double time_to_event,
                                         double time_to_censoring) {
    const int k = timeline.k;
    const int ev = detail::ceil_month(time_to_event, "time to event");
    const int ce = detail::ceil_month(time_to_censoring, "time to censoring");

    DiscretizedRow out;
    out.row.assign(k, Outcome::no);

    if (ev <= k) {
        if (ce > k || ce >= ev) {
            out.observed = ev;
            out.event = true;
        } else {
            out.observed = ce;
            out.event = false;
        }
    } else {
        out.observed = (ce <= k) ? ce : k + 1;
        out.event = false;
    }

    if (out.event) {
        for (int t = out.observed; t <= k; ++t) out.row[t - 1] = Outcome::yes;
    } else if (out.observed <= k) {
        for (int t = out.observed; t <= k; ++t) out.row[t - 1] = Outcome::na;
    }
    return out;
}

struct IceDiscretized {
    DiscretizedRow base;
    std::optional<int> ice_month;  // reported only if it precedes both the
                                   // observed time and the horizon
};

inline IceDiscretized discretize_with_ice(const Timeline& timeline, const EventTimes& times) {
    IceDiscretized out;
    out.base = discretize_subject(timeline, times.time_to_event, times.time_to_censoring);
    if (times.time_to_ice) {
        const int m = detail::ceil_month(*times.time_to_ice, "time to ICE");
        if (m <= std::min(out.base.observed, timeline.k)) out.ice_month = m;
    }
    return out;
}

// Assembles a SubjectRecord from a discretized row; censoring marks are
// derived from the NA pattern, treatment is constant.
inline SubjectRecord make_record(const Timeline& timeline, std::string id, TreatCode arm,
                                 std::vector<double> w, const DiscretizedRow& row) {
    SubjectRecord rec;
    rec.id = std::move(id);
    rec.w = std::move(w);
    rec.a.assign(timeline.k, arm);
    rec.c.assign(timeline.k, Censor::uncensored);
    rec.y = row.row;
    rec.l.assign(std::max(0, timeline.k - 1), std::nullopt);
    sync_censor_marks(rec);
    return rec;
}

}  // namespace tte
