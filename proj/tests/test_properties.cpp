#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "tte/mi.hpp"
#include "tte/simulate.hpp"
#include "tte/strategy.hpp"

using namespace tte;

namespace {

DgpConfig random_config(Rng& meta) {
    DgpConfig cfg;
    cfg.n = 2 * (4 + static_cast<int>(meta.integer(28)));
    cfg.timeline = Timeline{2 + static_cast<int>(meta.integer(9)), "month"};
    cfg.seed = meta.integer(1ull << 30);
    cfg.coef_a = -0.8 + 1.6 * meta.uniform();
    cfg.with_censoring = meta.bernoulli(0.8);
    cfg.with_ice = true;
    cfg.ice_terminal = meta.bernoulli(0.5);
    cfg.ice_kind = cfg.ice_terminal ? "death-other-cause" : "discontinuation";
    cfg.l_dim = static_cast<int>(meta.integer(3));
    return cfg;
}

// A record that respects the conventions in substance (no event under a
// censoring mark, no unexplained NA) but is written sloppily: junk values
// after the event, stray marks, NA/no noise inside the censored stretch.
SubjectRecord messy_record(Rng& rng, std::string id, int k) {
    SubjectRecord rec;
    rec.id = std::move(id);
    rec.a.assign(k, static_cast<TreatCode>(rng.integer(2)));
    rec.c.assign(k, Censor::uncensored);
    rec.y.assign(k, Outcome::no);
    rec.l.assign(std::max(0, k - 1), std::nullopt);

    switch (rng.integer(3)) {
        case 0: {  // event with arbitrary trailing junk
            const int e = 1 + static_cast<int>(rng.integer(k));
            rec.y[e - 1] = Outcome::yes;
            for (int i = e; i < k; ++i) {
                rec.y[i] = rng.bernoulli(0.5) ? Outcome::yes : Outcome::no;
                if (rng.bernoulli(0.3)) rec.c[i] = Censor::censored;
            }
            break;
        }
        case 1: {  // censored with unsynchronized cells under the marks
            const int ci = static_cast<int>(rng.integer(k));
            rec.c[ci] = Censor::censored;
            for (int i = ci + 1; i < k; ++i)
                if (rng.bernoulli(0.4)) rec.c[i] = Censor::censored;
            for (int i = ci; i < k; ++i)
                rec.y[i] = rng.bernoulli(0.5) ? Outcome::na : Outcome::no;
            break;
        }
        default: break;  // event-free survivor
    }
    return rec;
}

Strategy pick_strategy(Rng& meta, bool terminal) {
    static const Strategy for_terminal[] = {Strategy::composite, Strategy::competing_risk,
                                            Strategy::treatment_policy, Strategy::hypothetical,
                                            Strategy::while_on_treatment_alt1};
    static const Strategy for_nonterminal[] = {
        Strategy::composite,           Strategy::treatment_policy,
        Strategy::hypothetical,        Strategy::while_on_treatment_alt1,
        Strategy::while_on_treatment_alt2, Strategy::principal_stratum};
    if (terminal) return for_terminal[meta.integer(5)];
    return for_nonterminal[meta.integer(6)];
}

}  // namespace

TEST_CASE("simulated trials replay bitwise and satisfy the data conventions") {
    Rng meta(2024);
    for (int it = 0; it < 50; ++it) {
        auto cfg = random_config(meta);
        auto sim = simulate_trial(cfg);

        REQUIRE(validate_dataset(sim.data).empty());
        CHECK(apply_conventions(sim.data) == sim.data);

        auto replay = simulate_trial(cfg);
        CHECK(replay.data == sim.data);
        REQUIRE(replay.ices.size() == sim.ices.size());
        for (std::size_t i = 0; i < sim.ices.size(); ++i) {
            CHECK(replay.ices[i].subject_id == sim.ices[i].subject_id);
            CHECK(replay.ices[i].month == sim.ices[i].month);
        }

        // the potential-outcome oracle replays the same underlying draws
        auto pot = simulate_potential(cfg);
        REQUIRE(pot.size() == sim.data.subjects.size());
        for (std::size_t i = 0; i < pot.size(); ++i) {
            const auto& p = pot[i];
            CHECK(p.id == sim.data.subjects[i].id);
            CHECK(p.assigned == sim.data.subjects[i].a[0]);
            const double assigned_time =
                p.assigned == 1 ? p.t_event_treated : p.t_event_control;
            CHECK(assigned_time == sim.raw_times[i].time_to_event);
            CHECK(p.t_censoring == sim.raw_times[i].time_to_censoring);
            // shared noise: the arm ratio is exactly exp(coef_a)
            CHECK(p.t_event_treated / p.t_event_control ==
                  Catch::Approx(std::exp(cfg.coef_a)).epsilon(1e-12));
        }
    }
}

TEST_CASE("convention normalization is idempotent and yields valid datasets") {
    Rng rng(4711);
    for (int it = 0; it < 40; ++it) {
        const int k = 2 + static_cast<int>(rng.integer(8));
        TrialDataset ds;
        ds.timeline = Timeline{k, "month"};
        for (int i = 0; i < 12; ++i)
            ds.subjects.push_back(messy_record(rng, "r" + std::to_string(i), k));

        auto normalized = apply_conventions(ds);
        CHECK(apply_conventions(normalized) == normalized);
        CHECK(validate_dataset(normalized).empty());

        // normalization never moves the first event and never invents one
        for (std::size_t i = 0; i < ds.subjects.size(); ++i) {
            auto raw_first = ds.subjects[i].first_event_month();
            auto norm_first = normalized.subjects[i].first_event_month();
            CHECK(raw_first == norm_first);
        }
    }
}

TEST_CASE("strategy plans keep datasets valid and are stable under reapplication") {
    Rng meta(777);
    for (int it = 0; it < 60; ++it) {
        auto cfg = random_config(meta);
        auto sim = simulate_trial(cfg);

        // split the simulated ICE stream into up to two kinds
        IceRecords ices = sim.ices;
        for (auto& r : ices)
            if (meta.bernoulli(0.5)) r.kind = "rescue-" + cfg.ice_kind;

        std::set<std::string> kinds;
        for (const auto& r : ices) kinds.insert(r.kind);
        std::vector<std::pair<std::string, Strategy>> entries;
        for (const auto& kind : kinds)
            entries.emplace_back(kind, pick_strategy(meta, cfg.ice_terminal));
        auto plan = order_default(entries);

        auto res = compose_plan(sim.data, ices, plan);
        auto res_again = compose_plan(sim.data, ices, plan);
        CHECK(res_again.dataset == res.dataset);
        CHECK(res_again.censor_attribution == res.censor_attribution);

        if (auto* tds = std::get_if<TrialDataset>(&res.dataset)) {
            CHECK(validate_dataset(*tds).empty());

            // rewrites are projections: feeding the output back in changes nothing
            auto twice = compose_plan(*tds, ices, plan);
            CHECK(std::get<TrialDataset>(twice.dataset) == *tds);
            CHECK(twice.censor_attribution.empty());

            // attributed subjects really are censored in the transformed data
            for (const auto& [id, kind] : res.censor_attribution) {
                const auto* rec = tds->find(id);
                REQUIRE(rec != nullptr);
                CHECK(rec->first_censored_index().has_value());
                CHECK(kinds.count(kind) == 1);
            }
        } else {
            CHECK(validate_competing(std::get<CompetingDataset>(res.dataset)).empty());
        }
    }
}

TEST_CASE("monotone adjustment is a projection onto absorbing outcomes") {
    Rng rng(909);
    for (int it = 0; it < 80; ++it) {
        const int k = 1 + static_cast<int>(rng.integer(10));
        TrialDataset ds;
        ds.timeline = Timeline{k, "month"};
        for (int i = 0; i < 15; ++i) {
            SubjectRecord rec;
            rec.id = "m" + std::to_string(i);
            rec.a.assign(k, static_cast<TreatCode>(rng.integer(2)));
            rec.c.assign(k, Censor::uncensored);
            rec.y.resize(k);
            for (auto& y : rec.y) y = rng.bernoulli(0.4) ? Outcome::yes : Outcome::no;
            rec.l.assign(std::max(0, k - 1), std::nullopt);
            ds.subjects.push_back(std::move(rec));
        }

        auto adj = monotone_adjust(ds);
        CHECK(monotone_adjust(adj) == adj);
        CHECK(validate_dataset(adj).empty());

        for (std::size_t i = 0; i < ds.subjects.size(); ++i) {
            const auto& raw = ds.subjects[i];
            const auto& fixed = adj.subjects[i];
            CHECK(raw.first_event_month() == fixed.first_event_month());
            bool event = false;
            for (int t = 0; t < k; ++t) {
                if (event) CHECK(fixed.y[t] == Outcome::yes);
                event = event || fixed.y[t] == Outcome::yes;
                CHECK(fixed.c[t] == Censor::uncensored);
            }
        }
    }
}
