#pragma once

// Synthetic-trial generator: accelerated-failure-time times for the primary
// event, censoring, and one ICE, discretized onto the follow-up grid. The
// same per-subject noise draws can be replayed under both treatment arms,
// which yields an exact potential-outcome oracle for estimand ground truth.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "tte/discretize.hpp"
#include "tte/errors.hpp"
#include "tte/rng.hpp"
#include "tte/strategy.hpp"
#include "tte/trial_data.hpp"

namespace tte {

struct DgpConfig {
    int n = 400;
    Timeline timeline{10, "month"};

    // Linear predictors: intercept + coef_a * A + coef . W, exponentiated and
    // scaled by (noise_shift + Exp(rate)) noise. W[0] is Unif(0,1), the rest
    // are standard normal.
    double intercept_event = 1.0;
    double intercept_censor = 1.0;
    double intercept_ice = 1.0;
    std::vector<double> coef_event{0.5, 0.5};
    std::vector<double> coef_censor{0.25, -0.5};
    std::vector<double> coef_ice{-0.1, -0.2};
    double coef_a = -0.5;      // treatment effect on the event time
    double coef_a_ice = 0.0;   // treatment effect on the ICE time (none by default)
    double rate_event = 1.0;
    double rate_censor = 2.0;
    double rate_ice = 3.0;
    double noise_shift = 2.0;

    bool with_censoring = true;
    bool with_ice = true;
    std::string ice_kind = "discontinuation";
    bool ice_terminal = false;

    int l_dim = 0;  // synthetic time-dependent columns (noisy W transforms)

    std::uint64_t seed = 20240801;

    // The appendix text and its code listing disagree on the sign of the W1
    // coefficient in the event model; the prose (+0.5) is the default and
    // this selects the listed variant.
    static DgpConfig code_variant() {
        DgpConfig cfg;
        cfg.coef_event = {-0.5, 0.5};
        return cfg;
    }

    std::size_t w_dim() const { return coef_event.size(); }

    void check() const {
        if (n <= 0 || n % 2 != 0) throw DomainError("dgp: n must be positive and even");
        if (coef_event.empty()) throw DomainError("dgp: empty coefficient vector");
        if (coef_censor.size() != coef_event.size() || coef_ice.size() != coef_event.size())
            throw DomainError("dgp: coefficient vectors must share one covariate dimension");
        if (!(rate_event > 0.0 && rate_censor > 0.0 && rate_ice > 0.0))
            throw DomainError("dgp: noise rates must be positive");
        if (!(noise_shift >= 0.0)) throw DomainError("dgp: noise shift must be nonnegative");
        if (l_dim < 0) throw DomainError("dgp: l_dim must be nonnegative");
    }
};

namespace detail {

struct RawDraw {
    std::vector<double> w;
    double eps_event = 0.0;
    double eps_censor = 0.0;
    double eps_ice = 0.0;
};

// Per-subject stream with a fixed draw order, so toggling censoring or the
// ICE off never shifts any other subject's (or variable's) randomness.
inline RawDraw draw_raw(const DgpConfig& cfg, std::uint64_t index) {
    Rng rng(mix_seed(cfg.seed, index));
    RawDraw d;
    d.w.resize(cfg.w_dim());
    for (std::size_t j = 0; j < d.w.size(); ++j) d.w[j] = (j == 0) ? rng.uniform() : rng.normal();
    d.eps_event = rng.exponential(cfg.rate_event);
    d.eps_censor = rng.exponential(cfg.rate_censor);
    d.eps_ice = rng.exponential(cfg.rate_ice);
    return d;
}

inline double aft_time(double intercept, double coef_a, const std::vector<double>& coef,
                       const std::vector<double>& w, int a, double shift, double eps) {
    double lp = intercept + coef_a * a;
    for (std::size_t j = 0; j < coef.size(); ++j) lp += coef[j] * w[j];
    return std::exp(lp) * (shift + eps);
}

inline double event_time(const DgpConfig& cfg, const RawDraw& d, int a) {
    return aft_time(cfg.intercept_event, cfg.coef_a, cfg.coef_event, d.w, a, cfg.noise_shift,
                    d.eps_event);
}

inline double censor_time(const DgpConfig& cfg, const RawDraw& d) {
    return aft_time(cfg.intercept_censor, 0.0, cfg.coef_censor, d.w, 0, cfg.noise_shift,
                    d.eps_censor);
}

inline double ice_time(const DgpConfig& cfg, const RawDraw& d, int a) {
    return aft_time(cfg.intercept_ice, cfg.coef_a_ice, cfg.coef_ice, d.w, a, cfg.noise_shift,
                    d.eps_ice);
}

inline std::string subject_id(int index_1based, int n) {
    std::size_t width = 1;
    for (int v = n; v >= 10; v /= 10) ++width;
    std::string digits = std::to_string(index_1based);
    if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
    return "S" + digits;
}

}  // namespace detail

struct SimulatedTrial {
    TrialDataset data;
    IceRecords ices;
    std::vector<EventTimes> raw_times;  // aligned with data.subjects
};

// First n/2 subjects control, the rest treated.
inline SimulatedTrial simulate_trial(const DgpConfig& cfg) {
    cfg.check();
    const int k = cfg.timeline.k;

    SimulatedTrial out;
    out.data.timeline = cfg.timeline;
    out.data.covariate_names.resize(cfg.w_dim());
    for (std::size_t j = 0; j < cfg.w_dim(); ++j)
        out.data.covariate_names[j] = "W" + std::to_string(j + 1);
    out.data.l_covariate_names.resize(static_cast<std::size_t>(cfg.l_dim));
    for (int j = 0; j < cfg.l_dim; ++j)
        out.data.l_covariate_names[static_cast<std::size_t>(j)] = "Z" + std::to_string(j + 1);
    out.data.treatment_labels = {{0, "control"}, {1, "treated"}};

    out.data.subjects.reserve(static_cast<std::size_t>(cfg.n));
    out.raw_times.reserve(static_cast<std::size_t>(cfg.n));

    const double beyond = static_cast<double>(k) + 2.0;  // effective "never censored"
    for (int i = 0; i < cfg.n; ++i) {
        const int a = (i < cfg.n / 2) ? 0 : 1;
        auto d = detail::draw_raw(cfg, static_cast<std::uint64_t>(i));

        EventTimes times;
        times.time_to_event = detail::event_time(cfg, d, a);
        times.time_to_censoring = detail::censor_time(cfg, d);
        if (cfg.with_ice) times.time_to_ice = detail::ice_time(cfg, d, a);

        EventTimes effective = times;
        if (!cfg.with_censoring) effective.time_to_censoring = beyond;
        if (!cfg.with_ice) effective.time_to_ice.reset();

        auto disc = discretize_with_ice(cfg.timeline, effective);
        auto rec = make_record(cfg.timeline, detail::subject_id(i + 1, cfg.n),
                               static_cast<TreatCode>(a), d.w, disc.base);

        if (cfg.l_dim > 0) {
            Rng lrng(mix_seed(cfg.seed, 0x4C000000ull + static_cast<std::uint64_t>(i)));
            for (int t = 1; t <= k - 1; ++t) {
                std::vector<double> z(static_cast<std::size_t>(cfg.l_dim));
                for (int j = 0; j < cfg.l_dim; ++j)
                    z[static_cast<std::size_t>(j)] =
                        0.5 * d.w[static_cast<std::size_t>(j) % d.w.size()] + 0.5 * lrng.normal();
                if (rec.y[t - 1] != Outcome::na) rec.l[t - 1] = std::move(z);
            }
        }

        if (disc.ice_month)
            out.ices.push_back({rec.id, cfg.ice_kind, *disc.ice_month, cfg.ice_terminal});
        out.data.subjects.push_back(std::move(rec));
        out.raw_times.push_back(times);
    }
    return out;
}

enum class PrincipalStratum { aa, ad, da, dd };

inline const char* stratum_name(PrincipalStratum s) {
    switch (s) {
        case PrincipalStratum::aa: return "AA";
        case PrincipalStratum::ad: return "AD";
        case PrincipalStratum::da: return "DA";
        case PrincipalStratum::dd: return "DD";
    }
    return "?";
}

// First letter: under always-treat; second: under never-treat. A subject is
// 'A' (alive) when the potential terminal-ICE indicator at K is 0.
inline PrincipalStratum classify_principal_stratum(bool ice_by_k_treated, bool ice_by_k_control) {
    if (!ice_by_k_treated) return ice_by_k_control ? PrincipalStratum::ad : PrincipalStratum::aa;
    return ice_by_k_control ? PrincipalStratum::dd : PrincipalStratum::da;
}

struct PotentialSubject {
    std::string id;
    TreatCode assigned = 0;  // arm the subject would get in simulate_trial
    std::vector<double> w;
    double t_event_treated = 0.0;
    double t_event_control = 0.0;
    double t_censoring = 0.0;
    double t_ice_treated = 0.0;
    double t_ice_control = 0.0;
    bool event_by_k_treated = false;   // Y^(1,..,1)(K)
    bool event_by_k_control = false;   // Y^(0,..,0)(K)
    bool ice_by_k_treated = false;     // Y_D^(1,..,1)(K)
    bool ice_by_k_control = false;     // Y_D^(0,..,0)(K)
    PrincipalStratum stratum = PrincipalStratum::aa;
};

// Replays the simulate_trial noise under both arms for every subject.
inline std::vector<PotentialSubject> simulate_potential(const DgpConfig& cfg) {
    cfg.check();
    const double k = static_cast<double>(cfg.timeline.k);
    std::vector<PotentialSubject> out;
    out.reserve(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
        auto d = detail::draw_raw(cfg, static_cast<std::uint64_t>(i));
        PotentialSubject p;
        p.id = detail::subject_id(i + 1, cfg.n);
        p.assigned = (i < cfg.n / 2) ? 0 : 1;
        p.w = d.w;
        p.t_event_treated = detail::event_time(cfg, d, 1);
        p.t_event_control = detail::event_time(cfg, d, 0);
        p.t_censoring = detail::censor_time(cfg, d);
        p.t_ice_treated = detail::ice_time(cfg, d, 1);
        p.t_ice_control = detail::ice_time(cfg, d, 0);
        p.event_by_k_treated = p.t_event_treated <= k;
        p.event_by_k_control = p.t_event_control <= k;
        p.ice_by_k_treated = p.t_ice_treated <= k;
        p.ice_by_k_control = p.t_ice_control <= k;
        p.stratum = classify_principal_stratum(p.ice_by_k_treated, p.ice_by_k_control);
        out.push_back(std::move(p));
    }
    return out;
}

// Streaming Monte-Carlo oracle for E[1 - Y^abar(K)] under a constant regime,
// avoiding materializing millions of records.
inline double oracle_event_free_probability(const DgpConfig& cfg, std::uint64_t n_draws, int arm) {
    cfg.check();
    if (n_draws == 0) throw DomainError("oracle: need at least one draw");
    const double k = static_cast<double>(cfg.timeline.k);
    std::uint64_t alive = 0;
    for (std::uint64_t i = 0; i < n_draws; ++i) {
        auto d = detail::draw_raw(cfg, i);
        if (detail::event_time(cfg, d, arm) > k) ++alive;
    }
    return static_cast<double>(alive) / static_cast<double>(n_draws);
}

// Survivor average causal effect evaluated from potential outcomes over the
// stratum alive under both regimes.
inline double sace_oracle(const std::vector<PotentialSubject>& pots) {
    std::uint64_t n_aa = 0, alive_treated = 0, alive_control = 0;
    for (const auto& p : pots) {
        if (p.stratum != PrincipalStratum::aa) continue;
        ++n_aa;
        if (!p.event_by_k_treated) ++alive_treated;
        if (!p.event_by_k_control) ++alive_control;
    }
    if (n_aa == 0) throw IdentifiabilityError(0, "principal stratum AA is empty");
    return (static_cast<double>(alive_treated) - static_cast<double>(alive_control)) /
           static_cast<double>(n_aa);
}

}  // namespace tte
