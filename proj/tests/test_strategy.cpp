#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <variant>
#include <vector>

#include "helpers.hpp"
#include "tte/strategy.hpp"

using namespace tte;
using fixtures::censors;
using fixtures::figure_subjects;
using fixtures::make_subject;
using fixtures::outcomes;

TEST_CASE("composite strategy folds the ICE into the event") {
    auto fig = figure_subjects();

    SECTION("terminal ICE at month 5 becomes the composite event") {
        auto out = apply_composite(fig.data, fig.ices, "death-other-cause");
        const auto& s4 = *out.find("S4");
        CHECK(s4.y == outcomes("000011111111"));
        CHECK(s4.c == censors("000000000000"));
    }
    SECTION("PE before the ICE is untouched") {
        auto ds = fig.data;
        IceRecords ices{{"S2", "death-other-cause", 11, true}};
        auto out = apply_composite(ds, ices, "death-other-cause");
        CHECK(*out.find("S2") == *fig.data.find("S2"));
    }
    SECTION("subjects without the ICE are byte-identical") {
        auto out = apply_composite(fig.data, fig.ices, "death-other-cause");
        CHECK(*out.find("S1") == *fig.data.find("S1"));
        CHECK(*out.find("S2") == *fig.data.find("S2"));
        CHECK(*out.find("S3") == *fig.data.find("S3"));
    }
    SECTION("never increases an event time") {
        auto out = apply_composite(fig.data, fig.ices, "death-other-cause");
        for (const auto& rec : out.subjects) {
            auto before = fig.data.find(rec.id)->first_event_month();
            auto after = rec.first_event_month();
            if (before) {
                REQUIRE(after.has_value());
                CHECK(*after <= *before);
            }
        }
    }
    SECTION("non-terminal ICE strictly inside a censored stretch conflicts") {
        auto ds = fig.data;
        IceRecords ices{{"S3", "rescue", 12, false}};  // S3 censored at month 11
        CHECK_THROWS_AS(apply_composite(ds, ices, "rescue"), ConventionConflictError);
    }
    SECTION("terminal ICE strictly inside a censored stretch keeps the censoring") {
        auto ds = fig.data;
        IceRecords ices{{"S3", "death-other-cause", 12, true}};
        auto out = apply_composite(ds, ices, "death-other-cause");
        CHECK(*out.find("S3") == *fig.data.find("S3"));
    }
}

TEST_CASE("treatment policy rewrites only the treatment nodes") {
    auto fig = figure_subjects();

    SECTION("discontinuation codes return to the initial assignment") {
        auto out = apply_treatment_policy(fig.data, fig.ices, "discontinuation");
        const auto& s5 = *out.find("S5");
        for (int u = 0; u <= 6; ++u) CHECK(s5.a[u] == 1);
        CHECK(s5.y == outcomes("000000111111"));
        CHECK(s5.c == censors("000000000000"));
    }
    SECTION("identity on subjects without the ICE") {
        auto out = apply_treatment_policy(fig.data, fig.ices, "discontinuation");
        for (const auto& rec : out.subjects)
            if (rec.id != "S5") CHECK(rec == *fig.data.find(rec.id));
    }
    SECTION("rescue codes are rewritten too") {
        auto ds = fig.data;
        auto& s6 = ds.subjects[5];
        REQUIRE(s6.id == "S6");
        for (int u = 4; u <= 6; ++u) s6.a[u] = 2;  // rescue medication code
        IceRecords ices{{"S6", "rescue", 4, false}};
        auto out = apply_treatment_policy(ds, ices, "rescue");
        for (int u = 0; u <= 6; ++u) CHECK(out.find("S6")->a[u] == 1);
    }
}

TEST_CASE("hypothetical strategy censors from the ICE month") {
    auto fig = figure_subjects();

    SECTION("rescue at month 2 censors months 2..12") {
        auto out = apply_hypothetical(fig.data, fig.ices, "rescue");
        const auto& s6 = *out.find("S6");
        CHECK(s6.c == censors("011111111111"));
        CHECK(s6.y == outcomes("0..........."));
    }
    SECTION("event before the ICE is preserved") {
        auto ds = fig.data;
        IceRecords ices{{"S2", "rescue", 12, false}};  // event already at month 9
        auto out = apply_hypothetical(ds, ices, "rescue");
        CHECK(*out.find("S2") == *fig.data.find("S2"));
    }
    SECTION("never unreveals a cell") {
        auto out = apply_hypothetical(fig.data, fig.ices, "rescue");
        for (const auto& rec : out.subjects) {
            const auto& before = fig.data.find(rec.id)->y;
            for (std::size_t i = 0; i < rec.y.size(); ++i)
                if (before[i] == Outcome::na) CHECK(rec.y[i] == Outcome::na);
        }
    }
}

TEST_CASE("competing-risk strategy builds the two-dimensional outcome") {
    auto fig = figure_subjects();
    auto cds = apply_competing_risk(fig.data, fig.ices, "death-other-cause");

    SECTION("CE fires at the ICE month and the PE is frozen") {
        const CompetingSubject* s4 = nullptr;
        for (const auto& rec : cds.subjects)
            if (rec.id == "S4") s4 = &rec;
        REQUIRE(s4 != nullptr);
        CHECK(s4->y_ce == outcomes("000011111111"));
        CHECK(s4->y_pe == outcomes("000000000000"));
        CHECK(s4->c == censors("000000000000"));
    }
    SECTION("pure PE subject keeps its event in the PE component") {
        for (const auto& rec : cds.subjects)
            if (rec.id == "S2") {
                CHECK(rec.y_pe == outcomes("000000001111"));
                CHECK(rec.y_ce == outcomes("000000000000"));
            }
    }
    SECTION("output validates") { CHECK(validate_competing(cds).empty()); }
    SECTION("PE wins a same-month tie") {
        auto ds = fig.data;
        IceRecords ices{{"S2", "death-other-cause", 9, true}};  // PE also at month 9
        auto tie = apply_competing_risk(ds, ices, "death-other-cause");
        for (const auto& rec : tie.subjects)
            if (rec.id == "S2") {
                CHECK(rec.y_pe == outcomes("000000001111"));
                CHECK(rec.y_ce == outcomes("000000000000"));
            }
    }
    SECTION("non-terminal kinds are rejected") {
        CHECK_THROWS_AS(apply_competing_risk(fig.data, fig.ices, "rescue"), PlanError);
    }
}

TEST_CASE("while-on-treatment regime construction") {
    const Timeline tl{10, "month"};
    CHECK(make_regime_while_on_treatment(10, tl).abar == std::vector<TreatCode>(10, 1));
    CHECK(make_regime_while_on_treatment(0, tl).abar == std::vector<TreatCode>(10, 0));
    const auto r3 = make_regime_while_on_treatment(3, tl).abar;
    CHECK(r3 == std::vector<TreatCode>{1, 1, 1, 0, 0, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS(make_regime_while_on_treatment(11, tl), DomainError);
}

TEST_CASE("plan composition") {
    auto fig = figure_subjects();

    SECTION("the three-ICE example plan validates and preserves subjects") {
        StrategyPlan plan;
        plan.entries = {{"discontinuation", Strategy::treatment_policy},
                        {"death-other-cause", Strategy::competing_risk},
                        {"rescue", Strategy::hypothetical}};
        auto result = compose_plan(fig.data, fig.ices, plan);
        REQUIRE(std::holds_alternative<CompetingDataset>(result.dataset));
        const auto& cds = std::get<CompetingDataset>(result.dataset);
        CHECK(cds.subjects.size() == fig.data.subjects.size());
        CHECK(validate_competing(cds).empty());
    }
    SECTION("empty plan on ICE-free data is the identity") {
        auto result = compose_plan(fig.data, {}, StrategyPlan{});
        REQUIRE(std::holds_alternative<TrialDataset>(result.dataset));
        CHECK(std::get<TrialDataset>(result.dataset) == fig.data);
    }
    SECTION("unmapped ICE kind fails") {
        StrategyPlan plan;
        plan.entries = {{"discontinuation", Strategy::treatment_policy}};
        CHECK_THROWS_AS(compose_plan(fig.data, fig.ices, plan), PlanError);
    }
    SECTION("duplicate kind fails") {
        StrategyPlan plan;
        plan.entries = {{"rescue", Strategy::hypothetical}, {"rescue", Strategy::composite}};
        CHECK_THROWS_AS(plan.check(), PlanError);
    }
    SECTION("hypothetical vs treatment policy differ exactly where expected") {
        IceRecords one{{"S5", "discontinuation", 4, false}};
        auto hyp = apply_hypothetical(fig.data, one, "discontinuation");
        auto pol = apply_treatment_policy(fig.data, one, "discontinuation");
        const auto& h = *hyp.find("S5");
        const auto& p = *pol.find("S5");
        CHECK(h.y != p.y);
        CHECK(h.c != p.c);
        CHECK(h.w == p.w);
        // the policy rewrite touches A, the hypothetical rewrite leaves it
        CHECK(p.a == std::vector<TreatCode>(12, 1));
        CHECK(h.a == fig.data.find("S5")->a);
    }
    SECTION("while-on-treatment alt 1 tags censor attribution") {
        StrategyPlan plan;
        plan.entries = {{"discontinuation", Strategy::while_on_treatment_alt1},
                        {"death-other-cause", Strategy::composite},
                        {"rescue", Strategy::hypothetical}};
        auto result = compose_plan(fig.data, fig.ices, plan);
        REQUIRE(std::holds_alternative<TrialDataset>(result.dataset));
        REQUIRE(result.censor_attribution.count("S5") == 1);
        CHECK(result.censor_attribution.at("S5") == "discontinuation");
        // S5 is censored from month 4 in the transformed data
        const auto& s5 = *std::get<TrialDataset>(result.dataset).find("S5");
        CHECK(s5.c == censors("000111111111"));
    }
    SECTION("default ordering runs terminal strategies first") {
        auto plan = order_default({{"rescue", Strategy::hypothetical},
                                   {"discontinuation", Strategy::treatment_policy},
                                   {"death-other-cause", Strategy::composite}});
        REQUIRE(plan.entries.size() == 3);
        CHECK(plan.entries[0].first == "death-other-cause");
        CHECK(plan.entries[1].first == "discontinuation");
        CHECK(plan.entries[2].first == "rescue");
    }
}
