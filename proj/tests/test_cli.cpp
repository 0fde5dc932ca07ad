#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "tte/cli.hpp"

using namespace tte;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string scratch(const std::string& name) {
    static const auto dir = [] {
        auto d = std::filesystem::temp_directory_path() / "tte_cli_tests";
        std::filesystem::create_directories(d);
        return d;
    }();
    return (dir / name).string();
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("tte");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_command(static_cast<int>(argv.size()), argv.data());
}

// K = 12 config driving the figure dataset end to end.
const char* kFigureConfig = R"({
  "version": 1,
  "seed": 3,
  "timeline": {"k": 12},
  "estimand": {
    "summary": "SURVIVAL_AT_K",
    "regimes": ["always-treat"],
    "horizon": 12,
    "plan": [
      {"kind": "death-other-cause", "strategy": "composite"},
      {"kind": "discontinuation", "strategy": "treatment_policy"},
      {"kind": "rescue", "strategy": "hypothetical"}
    ]
  },
  "estimator": {"method": "kaplan_meier"}
})";

void write_figure_inputs(const std::string& data_path, const std::string& ice_path) {
    auto fig = fixtures::figure_subjects();
    write_text_file(data_path, write_csv(dataset_to_csv(fig.data)));
    write_text_file(ice_path, write_csv(ices_to_csv(fig.ices)));
}

}  // namespace

TEST_CASE("simulate writes a valid dataset, ICE records, and a reproducible report") {
    const std::string cfg = scratch("sim_cfg.json");
    write_text_file(cfg, R"({"version":1, "seed":4, "timeline":{"k":6}, "dgp":{"n":50}})");

    const std::string out1 = scratch("sim1.csv"), ice1 = scratch("sim1_ice.csv");
    const std::string rep1 = scratch("sim1_rep.json"), oracle1 = scratch("sim1_oracle.csv");
    REQUIRE(run({"simulate", "--config", cfg, "--out", out1, "--ice", ice1, "--oracle", oracle1,
                 "--report", rep1}) == kExitOk);

    auto ds = csv_to_dataset(parse_csv(read_text_file(out1)));
    CHECK(ds.subjects.size() == 50);
    CHECK(ds.timeline.k == 6);
    CHECK(validate_dataset(apply_conventions(ds)).empty());

    auto oracle = parse_csv(read_text_file(oracle1));
    CHECK(oracle.rows.size() == 50);

    auto report = Json::parse(read_text_file(rep1));
    CHECK(report["toolkit_version"] == kToolkitVersion);
    CHECK(report["command"] == "simulate");
    CHECK(report["seed"] == 4);
    CHECK(report["n"] == 50);
    CHECK(report["stratum_counts"].is_object());
    CHECK(report["artifacts"].size() == 3);

    // bytes are stable under replay
    const std::string out2 = scratch("sim2.csv"), ice2 = scratch("sim2_ice.csv");
    const std::string rep2 = scratch("sim2_rep.json"), oracle2 = scratch("sim2_oracle.csv");
    REQUIRE(run({"simulate", "--config", cfg, "--out", out2, "--ice", ice2, "--oracle", oracle2,
                 "--report", rep2}) == kExitOk);
    CHECK(read_text_file(out1) == read_text_file(out2));
    CHECK(read_text_file(ice1) == read_text_file(ice2));
    CHECK(read_text_file(oracle1) == read_text_file(oracle2));

    // a different seed changes the data
    const std::string out3 = scratch("sim3.csv");
    REQUIRE(run({"simulate", "--config", cfg, "--seed", "5", "--out", out3}) == kExitOk);
    CHECK(read_text_file(out1) != read_text_file(out3));
}

TEST_CASE("discretize converts a continuous times table") {
    const std::string cfg = scratch("dis_cfg.json");
    write_text_file(cfg, R"({"version":1, "timeline":{"k":12}})");
    const std::string in = scratch("times.csv");
    write_text_file(in,
                    "id,tY,tC,tI,kind,terminal,arm\n"
                    "a,8.2,30,NA,,0,1\n"
                    "b,30,10.5,3.2,rescue,0,1\n"
                    "c,30,30,NA,,0,0\n");
    const std::string out = scratch("dis_out.csv"), ice = scratch("dis_ice.csv");
    const std::string rep = scratch("dis_rep.json");
    REQUIRE(run({"discretize", "--config", cfg, "--input", in, "--out", out, "--ice", ice,
                 "--report", rep}) == kExitOk);

    auto ds = csv_to_dataset(parse_csv(read_text_file(out)));
    REQUIRE(ds.subjects.size() == 3);
    CHECK(validate_dataset(ds).empty());
    CHECK(ds.find("a")->first_event_month() == 9);      // event in (8, 9]
    CHECK(ds.find("b")->first_censored_index() == 10);  // censored in month 11
    CHECK_FALSE(ds.find("c")->first_event_month().has_value());
    CHECK_FALSE(ds.find("c")->first_censored_index().has_value());

    auto ices = csv_to_ices(parse_csv(read_text_file(ice)));
    REQUIRE(ices.size() == 1);
    CHECK(ices[0].subject_id == "b");
    CHECK(ices[0].kind == "rescue");
    CHECK(ices[0].month == 4);

    auto report = Json::parse(read_text_file(rep));
    CHECK(report["n"] == 3);
    CHECK(report["ice_count"] == 1);
}

TEST_CASE("validate accepts conforming data and reports violations with exit 3") {
    const std::string good = scratch("val_good.csv");
    write_figure_inputs(good, scratch("val_good_ice.csv"));
    CHECK(run({"validate", "--input", good}) == kExitOk);

    const std::string bad = scratch("val_bad.csv");
    write_text_file(bad, "id,A0,A1,C0,C1,Y1,Y2\nx,1,1,0,0,1,0\n");
    const std::string out = scratch("val_bad_out.json");
    CHECK(run({"validate", "--input", bad, "--out", out}) == kExitValidation);
    auto payload = Json::parse(read_text_file(out));
    REQUIRE(payload["violations"].size() == 1);
    CHECK(payload["violations"][0]["rule"] == "outcome-monotone");
    CHECK(payload["violations"][0]["subject_id"] == "x");
}

TEST_CASE("estimate runs the configured plan and is byte-stable") {
    const std::string cfg = scratch("est_cfg.json");
    write_text_file(cfg, kFigureConfig);
    const std::string data = scratch("est_data.csv"), ice = scratch("est_ice.csv");
    write_figure_inputs(data, ice);

    const std::string out1 = scratch("est_out1.json");
    REQUIRE(run({"estimate", "--config", cfg, "--input", data, "--ice", ice, "--out", out1}) ==
            kExitOk);
    auto report = Json::parse(read_text_file(out1));
    CHECK(report["command"] == "estimate");
    CHECK(report["result"]["method"] == "kaplan_meier");
    CHECK(report["result"]["estimand"] == "survival_at_12");
    CHECK(report["input_hash"]["input"].is_string());
    CHECK(report["input_hash"]["ice"].is_string());

    // independent check: compose the same plan in-process
    auto fig = fixtures::figure_subjects();
    StrategyPlan plan;
    plan.entries = {{"death-other-cause", Strategy::composite},
                    {"discontinuation", Strategy::treatment_policy},
                    {"rescue", Strategy::hypothetical}};
    auto transformed = compose_plan(apply_conventions(fig.data), fig.ices, plan);
    auto km = km_curve(std::get<TrialDataset>(transformed.dataset), TreatCode{1});
    CHECK(report["result"]["point"].get<double>() == Catch::Approx(km.survival_at(12)));

    const std::string out2 = scratch("est_out2.json");
    REQUIRE(run({"estimate", "--config", cfg, "--input", data, "--ice", ice, "--out", out2}) ==
            kExitOk);
    CHECK(read_text_file(out1) == read_text_file(out2));
}

TEST_CASE("estimate rejects a dataset the conventions cannot repair") {
    const std::string cfg = scratch("estv_cfg.json");
    write_text_file(cfg, R"({
      "version": 1, "timeline": {"k": 2},
      "estimand": {"summary": "SURVIVAL_AT_K", "regimes": ["always-treat"], "horizon": 2},
      "estimator": {"method": "kaplan_meier"}
    })");

    // NA outcome with no censoring mark: a genuine conflict, exit 3
    const std::string bad = scratch("estv_bad.csv");
    write_text_file(bad, "id,A0,A1,C0,C1,Y1,Y2\nx,1,1,0,0,NA,0\n");
    CHECK(run({"estimate", "--config", cfg, "--input", bad, "--out", scratch("estv_out.json")}) ==
          kExitValidation);

    // a reverting outcome is sloppy but normalizable: estimate proceeds
    const std::string sloppy = scratch("estv_sloppy.csv");
    write_text_file(sloppy, "id,A0,A1,C0,C1,Y1,Y2\nx,1,1,0,0,1,0\ny,1,1,0,0,0,0\n");
    CHECK(run({"estimate", "--config", cfg, "--input", sloppy, "--out",
               scratch("estv_out2.json")}) == kExitOk);
}

TEST_CASE("transform emits competing-risk data and censor attributions") {
    const std::string data = scratch("tra_data.csv"), ice = scratch("tra_ice.csv");
    write_figure_inputs(data, ice);

    const std::string cfg = scratch("tra_cfg.json");
    write_text_file(cfg, R"({
      "version": 1, "timeline": {"k": 12},
      "estimand": {
        "summary": "CIF_AT_K", "regimes": ["always-treat"], "horizon": 12,
        "plan": [
          {"kind": "death-other-cause", "strategy": "competing_risk"},
          {"kind": "discontinuation", "strategy": "treatment_policy"},
          {"kind": "rescue", "strategy": "hypothetical"}
        ]
      },
      "estimator": {"method": "aalen_johansen"}
    })");

    const std::string out = scratch("tra_out.csv"), rep = scratch("tra_rep.json");
    REQUIRE(run({"transform", "--config", cfg, "--input", data, "--ice", ice, "--out", out,
                 "--report", rep}) == kExitOk);
    auto table = parse_csv(read_text_file(out));
    CHECK(table.has_column("YPE1"));
    CHECK(table.has_column("YCE12"));
    CHECK(table.rows.size() == 6);
    auto report = Json::parse(read_text_file(rep));
    CHECK(report["competing"] == true);

    // the same estimand config drives the aalen-johansen estimate
    const std::string est_out = scratch("tra_est.json");
    REQUIRE(run({"estimate", "--config", cfg, "--input", data, "--ice", ice, "--out", est_out}) ==
            kExitOk);
    auto est = Json::parse(read_text_file(est_out));
    CHECK(est["result"]["method"] == "aalen_johansen");
    CHECK(est["result"]["estimand"] == "cif_pe_at_12");

    // a while-on-treatment tagging run records who was censored by which kind
    const std::string cfg2 = scratch("tra_cfg2.json");
    write_text_file(cfg2, R"({
      "version": 1, "timeline": {"k": 12},
      "estimand": {
        "summary": "SURVIVAL_AT_K", "regimes": ["always-treat"], "horizon": 12,
        "plan": [
          {"kind": "death-other-cause", "strategy": "composite"},
          {"kind": "discontinuation", "strategy": "while_on_treatment_alt1"},
          {"kind": "rescue", "strategy": "while_on_treatment_alt1"}
        ]
      },
      "estimator": {"method": "kaplan_meier"}
    })");
    const std::string out2 = scratch("tra_out2.csv"), attr = scratch("tra_attr.csv");
    REQUIRE(run({"transform", "--config", cfg2, "--input", data, "--ice", ice, "--out", out2,
                 "--attribution", attr}) == kExitOk);
    auto attr_table = parse_csv(read_text_file(attr));
    REQUIRE(attr_table.rows.size() == 2);
    bool s5 = false, s6 = false;
    for (const auto& row : attr_table.rows) {
        if (row[0] == "S5" && row[1] == "discontinuation") s5 = true;
        if (row[0] == "S6" && row[1] == "rescue") s6 = true;
    }
    CHECK(s5);
    CHECK(s6);
}

TEST_CASE("sensitivity pools imputations and reports the assumption") {
    auto ds = fixtures::random_trial(61, 80, 6, 0.15, 0.2);
    ds.treatment_labels = {{0, "arm 0"}, {1, "arm 1"}};
    const std::string data = scratch("sen_data.csv");
    write_text_file(data, write_csv(dataset_to_csv(ds)));

    const std::string cfg = scratch("sen_cfg.json");
    write_text_file(cfg, R"({
      "version": 1, "seed": 9, "timeline": {"k": 6},
      "estimand": {"summary": "SURVIVAL_AT_K", "regimes": ["always-treat"], "horizon": 6},
      "estimator": {"method": "kaplan_meier"},
      "mi": {"assumption": "J2R", "m": 4, "reference_arm": 0}
    })");

    const std::string out1 = scratch("sen_out1.json");
    REQUIRE(run({"sensitivity", "--config", cfg, "--input", data, "--out", out1}) == kExitOk);
    auto report = Json::parse(read_text_file(out1));
    CHECK(report["assumption"] == "J2R");
    CHECK(report["pooled"]["m"] == 4);
    CHECK(report["per_imputation"].size() == 4);
    CHECK(report["failures"] == 0);
    CHECK(report["pooled"]["point"].is_number());

    const std::string out2 = scratch("sen_out2.json");
    REQUIRE(run({"sensitivity", "--config", cfg, "--input", data, "--out", out2}) == kExitOk);
    CHECK(read_text_file(out1) == read_text_file(out2));

    // combined run keyed by an attribution table
    const std::string attr = scratch("sen_attr.csv");
    CsvTable attr_table;
    attr_table.header = {"id", "kind"};
    for (const auto& rec : ds.subjects)
        if (rec.first_censored_index()) attr_table.rows.push_back({rec.id, "rescue"});
    write_text_file(attr, write_csv(attr_table));

    const std::string cfg2 = scratch("sen_cfg2.json");
    write_text_file(cfg2, R"({
      "version": 1, "seed": 9, "timeline": {"k": 6},
      "estimand": {"summary": "SURVIVAL_AT_K", "regimes": ["always-treat"], "horizon": 6},
      "estimator": {"method": "kaplan_meier"},
      "mi": {"assumption_by_kind": {"rescue": "CR"}, "m": 4, "reference_arm": 0}
    })");
    const std::string out3 = scratch("sen_out3.json");
    REQUIRE(run({"sensitivity", "--config", cfg2, "--input", data, "--attribution", attr,
                 "--out", out3}) == kExitOk);
    auto combined = Json::parse(read_text_file(out3));
    CHECK(combined["assumption"] == "combined");
    CHECK(combined["pooled"]["m"] == 4);
}

TEST_CASE("config problems exit with code 2 and name the field") {
    const std::string data = scratch("cfg_data.csv");
    write_figure_inputs(data, scratch("cfg_ice.csv"));
    auto out = scratch("cfg_out.json");

    auto expect_config_error = [&](const std::string& name, const std::string& body) {
        const std::string path = scratch(name);
        write_text_file(path, body);
        CHECK(run({"estimate", "--config", path, "--input", data, "--out", out}) == kExitConfig);
    };

    expect_config_error("bad1.json", R"({"version":1, "timeline":{"k":12}, "zap":1})");
    expect_config_error("bad2.json", R"({"version":2, "timeline":{"k":12}})");
    expect_config_error("bad3.json", R"({"version":1})");
    expect_config_error("bad4.json", "{not json");
    expect_config_error("bad5.json", R"({"version":1, "timeline":{"k":12},
        "estimand":{"summary":"SURVIVAL_AT_K","regimes":["sometimes-treat"],"horizon":12},
        "estimator":{"method":"kaplan_meier"}})");
    expect_config_error("bad6.json", R"({"version":1, "timeline":{"k":12},
        "estimand":{"summary":"SURVIVAL_AT_K","regimes":["always-treat"],"horizon":40},
        "estimator":{"method":"kaplan_meier"}})");
    expect_config_error("bad7.json", R"({"version":1, "timeline":{"k":12},
        "censored_is_one": false})");
    expect_config_error("bad8.json", R"({"version":1, "timeline":{"k":12},
        "estimand":{"summary":"SURVIVAL_AT_K","regimes":["always-treat"],"horizon":12}})");

    // config says K=12 but the data say otherwise
    const std::string short_cfg = scratch("bad_k.json");
    write_text_file(short_cfg, R"({"version":1, "timeline":{"k":5},
        "estimand":{"summary":"SURVIVAL_AT_K","regimes":["always-treat"],"horizon":5},
        "estimator":{"method":"kaplan_meier"}})");
    CHECK(run({"estimate", "--config", short_cfg, "--input", data, "--out", out}) == kExitConfig);

    // sensitivity without an mi block
    const std::string no_mi = scratch("bad_nomi.json");
    write_text_file(no_mi, kFigureConfig);
    CHECK(run({"sensitivity", "--config", no_mi, "--input", data, "--out", out}) == kExitConfig);

    // bogus --format flag
    const std::string ok_cfg = scratch("ok_cfg.json");
    write_text_file(ok_cfg, kFigureConfig);
    CHECK(run({"estimate", "--config", ok_cfg, "--input", data, "--ice", scratch("cfg_ice.csv"),
               "--out", out, "--format", "yaml"}) == kExitConfig);

    // missing required CLI options are a usage error, not a crash
    CHECK(run({"simulate"}) != kExitOk);
}
