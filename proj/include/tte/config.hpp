#pragma once

// JSON pipeline configuration. One file drives every subcommand; unknown
// keys are rejected and every complaint carries the offending field path.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tte/csv.hpp"
#include "tte/errors.hpp"
#include "tte/estimand.hpp"
#include "tte/estimate.hpp"
#include "tte/gcomp.hpp"
#include "tte/mi.hpp"
#include "tte/simulate.hpp"
#include "tte/strategy.hpp"

#include "json.hpp"

namespace tte {

using Json = nlohmann::json;

enum class EstimatorKind { km, ipcw, gcomp, tmle, aalen_johansen };

inline const char* estimator_name(EstimatorKind e) {
    switch (e) {
        case EstimatorKind::km: return "kaplan_meier";
        case EstimatorKind::ipcw: return "ipcw";
        case EstimatorKind::gcomp: return "seq_gcomp";
        case EstimatorKind::tmle: return "targeted_gcomp";
        case EstimatorKind::aalen_johansen: return "aalen_johansen";
    }
    return "?";
}

struct EstimatorConfig {
    EstimatorKind kind = EstimatorKind::km;
    std::vector<std::string> terms;
    bool saturated = false;
    bool include_last_l = true;
    CensorModelOptions censor;
    int bootstrap_b = 0;
    std::uint64_t bootstrap_seed = 7;
};

struct MiConfig {
    bool combined = false;
    MiSpec single;
    CombinedMiSpec multi;
    MiModelSpec model;
};

struct PipelineConfig {
    int version = 1;
    std::uint64_t seed = 1;
    Timeline timeline{1, "month"};
    bool censored_is_one = true;  // spelling of the C columns in CSV files

    std::optional<DgpConfig> dgp;
    std::optional<EstimandSpec> estimand;
    std::optional<EstimatorConfig> estimator;
    std::optional<MiConfig> mi;
    std::string report_format = "json";
};

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

inline void expect_keys(const Json& obj, const std::string& path,
                        const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ConfigError(join_path(path, key), "unknown field");
    }
}

inline const Json& require(const Json& obj, const std::string& path, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(join_path(path, key), "missing required field");
    return *it;
}

template <typename T>
T as(const Json& value, const std::string& path) {
    try {
        return value.get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(path, "has the wrong type");
    }
}

inline RegimeSpec parse_regime(const Json& value, const std::string& path, const Timeline& tl) {
    if (value.is_string()) {
        const auto text = value.get<std::string>();
        if (text == "always-treat") return RegimeSpec::constant(1, tl.k);
        if (text == "never-treat") return RegimeSpec::constant(0, tl.k);
        const std::string prefix = "while-on-treatment:";
        if (text.rfind(prefix, 0) == 0) {
            int k_on = 0;
            try {
                k_on = std::stoi(text.substr(prefix.size()));
            } catch (...) {
                throw ConfigError(path, "bad while-on-treatment month count");
            }
            return make_regime_while_on_treatment(k_on, tl);
        }
        throw ConfigError(path, "unknown named regime '" + text + "'");
    }
    if (!value.is_array()) throw ConfigError(path, "must be a code array or a named regime");
    RegimeSpec regime;
    for (const auto& code : value)
        regime.abar.push_back(static_cast<TreatCode>(as<int>(code, path)));
    return regime;
}

inline Strategy parse_strategy(const std::string& text, const std::string& path) {
    for (Strategy s : {Strategy::composite, Strategy::treatment_policy, Strategy::hypothetical,
                       Strategy::while_on_treatment_alt1, Strategy::while_on_treatment_alt2,
                       Strategy::competing_risk, Strategy::principal_stratum})
        if (text == strategy_name(s)) return s;
    throw ConfigError(path, "unknown strategy '" + text + "'");
}

inline StrategyPlan parse_plan(const Json& value, const std::string& path) {
    if (!value.is_array()) throw ConfigError(path, "must be an array of {kind, strategy}");
    StrategyPlan plan;
    std::size_t i = 0;
    for (const auto& entry : value) {
        const std::string epath = path + "[" + std::to_string(i++) + "]";
        if (!entry.is_object()) throw ConfigError(epath, "must be an object");
        expect_keys(entry, epath, {"kind", "strategy"});
        plan.entries.emplace_back(
            as<std::string>(require(entry, epath, "kind"), join_path(epath, "kind")),
            parse_strategy(as<std::string>(require(entry, epath, "strategy"),
                                           join_path(epath, "strategy")),
                           join_path(epath, "strategy")));
    }
    try {
        plan.check();
    } catch (const PlanError& e) {
        throw ConfigError(path, e.what());
    }
    return plan;
}

inline MiAssumption parse_assumption(const std::string& text, const std::string& path) {
    if (text == "CAR") return MiAssumption::car;
    if (text == "CR") return MiAssumption::cr;
    if (text == "J2R") return MiAssumption::j2r;
    throw ConfigError(path, "unknown assumption '" + text + "'");
}

inline DgpConfig parse_dgp(const Json& obj, const std::string& path, const Timeline& tl,
                           std::uint64_t default_seed) {
    expect_keys(obj, path,
                {"n", "variant", "intercept_event", "intercept_censor", "intercept_ice",
                 "coef_event", "coef_censor", "coef_ice", "coef_a", "coef_a_ice", "rate_event",
                 "rate_censor", "rate_ice", "noise_shift", "with_censoring", "with_ice",
                 "ice_kind", "ice_terminal", "l_dim", "seed"});
    DgpConfig cfg;
    if (obj.contains("variant")) {
        const auto variant = as<std::string>(obj["variant"], join_path(path, "variant"));
        if (variant == "code")
            cfg = DgpConfig::code_variant();
        else if (variant != "prose")
            throw ConfigError(join_path(path, "variant"), "must be 'prose' or 'code'");
    }
    cfg.timeline = tl;
    cfg.seed = default_seed;
    if (obj.contains("n")) cfg.n = as<int>(obj["n"], join_path(path, "n"));
    if (obj.contains("intercept_event"))
        cfg.intercept_event = as<double>(obj["intercept_event"], join_path(path, "intercept_event"));
    if (obj.contains("intercept_censor"))
        cfg.intercept_censor =
            as<double>(obj["intercept_censor"], join_path(path, "intercept_censor"));
    if (obj.contains("intercept_ice"))
        cfg.intercept_ice = as<double>(obj["intercept_ice"], join_path(path, "intercept_ice"));
    if (obj.contains("coef_event"))
        cfg.coef_event = as<std::vector<double>>(obj["coef_event"], join_path(path, "coef_event"));
    if (obj.contains("coef_censor"))
        cfg.coef_censor =
            as<std::vector<double>>(obj["coef_censor"], join_path(path, "coef_censor"));
    if (obj.contains("coef_ice"))
        cfg.coef_ice = as<std::vector<double>>(obj["coef_ice"], join_path(path, "coef_ice"));
    if (obj.contains("coef_a")) cfg.coef_a = as<double>(obj["coef_a"], join_path(path, "coef_a"));
    if (obj.contains("coef_a_ice"))
        cfg.coef_a_ice = as<double>(obj["coef_a_ice"], join_path(path, "coef_a_ice"));
    if (obj.contains("rate_event"))
        cfg.rate_event = as<double>(obj["rate_event"], join_path(path, "rate_event"));
    if (obj.contains("rate_censor"))
        cfg.rate_censor = as<double>(obj["rate_censor"], join_path(path, "rate_censor"));
    if (obj.contains("rate_ice"))
        cfg.rate_ice = as<double>(obj["rate_ice"], join_path(path, "rate_ice"));
    if (obj.contains("noise_shift"))
        cfg.noise_shift = as<double>(obj["noise_shift"], join_path(path, "noise_shift"));
    if (obj.contains("with_censoring"))
        cfg.with_censoring = as<bool>(obj["with_censoring"], join_path(path, "with_censoring"));
    if (obj.contains("with_ice"))
        cfg.with_ice = as<bool>(obj["with_ice"], join_path(path, "with_ice"));
    if (obj.contains("ice_kind"))
        cfg.ice_kind = as<std::string>(obj["ice_kind"], join_path(path, "ice_kind"));
    if (obj.contains("ice_terminal"))
        cfg.ice_terminal = as<bool>(obj["ice_terminal"], join_path(path, "ice_terminal"));
    if (obj.contains("l_dim")) cfg.l_dim = as<int>(obj["l_dim"], join_path(path, "l_dim"));
    if (obj.contains("seed")) cfg.seed = as<std::uint64_t>(obj["seed"], join_path(path, "seed"));
    try {
        cfg.check();
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
    return cfg;
}

inline EstimatorConfig parse_estimator(const Json& obj, const std::string& path) {
    expect_keys(obj, path,
                {"method", "terms", "saturated", "include_last_l", "censor_model", "censor_terms",
                 "censor_floor", "bootstrap_b", "bootstrap_seed"});
    EstimatorConfig cfg;
    const auto method =
        as<std::string>(require(obj, path, "method"), join_path(path, "method"));
    if (method == "kaplan_meier")
        cfg.kind = EstimatorKind::km;
    else if (method == "ipcw")
        cfg.kind = EstimatorKind::ipcw;
    else if (method == "seq_gcomp")
        cfg.kind = EstimatorKind::gcomp;
    else if (method == "targeted_gcomp")
        cfg.kind = EstimatorKind::tmle;
    else if (method == "aalen_johansen")
        cfg.kind = EstimatorKind::aalen_johansen;
    else
        throw ConfigError(join_path(path, "method"), "unknown method '" + method + "'");

    if (obj.contains("terms"))
        cfg.terms = as<std::vector<std::string>>(obj["terms"], join_path(path, "terms"));
    if (obj.contains("saturated"))
        cfg.saturated = as<bool>(obj["saturated"], join_path(path, "saturated"));
    if (obj.contains("include_last_l"))
        cfg.include_last_l = as<bool>(obj["include_last_l"], join_path(path, "include_last_l"));
    if (obj.contains("censor_model")) {
        const auto kind =
            as<std::string>(obj["censor_model"], join_path(path, "censor_model"));
        if (kind == "saturated")
            cfg.censor.kind = CensorModelKind::saturated;
        else if (kind == "logistic")
            cfg.censor.kind = CensorModelKind::logistic_w;
        else
            throw ConfigError(join_path(path, "censor_model"), "must be saturated or logistic");
    }
    if (obj.contains("censor_terms"))
        cfg.censor.terms =
            as<std::vector<std::string>>(obj["censor_terms"], join_path(path, "censor_terms"));
    if (obj.contains("censor_floor"))
        cfg.censor.floor = as<double>(obj["censor_floor"], join_path(path, "censor_floor"));
    if (obj.contains("bootstrap_b"))
        cfg.bootstrap_b = as<int>(obj["bootstrap_b"], join_path(path, "bootstrap_b"));
    if (obj.contains("bootstrap_seed"))
        cfg.bootstrap_seed =
            as<std::uint64_t>(obj["bootstrap_seed"], join_path(path, "bootstrap_seed"));
    return cfg;
}

inline MiConfig parse_mi(const Json& obj, const std::string& path, std::uint64_t default_seed) {
    expect_keys(obj, path,
                {"assumption", "assumption_by_kind", "m", "seed", "reference_arm", "estimator",
                 "terms", "include_arm", "include_last_l"});
    MiConfig cfg;
    if (obj.contains("assumption_by_kind")) {
        if (obj.contains("assumption"))
            throw ConfigError(path, "give either assumption or assumption_by_kind, not both");
        cfg.combined = true;
        const auto& map = obj["assumption_by_kind"];
        if (!map.is_object())
            throw ConfigError(join_path(path, "assumption_by_kind"), "must be an object");
        for (const auto& [kind, value] : map.items())
            cfg.multi.assumption_by_kind[kind] = parse_assumption(
                as<std::string>(value, join_path(path, "assumption_by_kind." + kind)),
                join_path(path, "assumption_by_kind." + kind));
    } else {
        cfg.single.assumption =
            parse_assumption(as<std::string>(require(obj, path, "assumption"),
                                             join_path(path, "assumption")),
                             join_path(path, "assumption"));
    }
    cfg.single.seed = default_seed;
    cfg.multi.seed = default_seed;
    if (obj.contains("m")) {
        const int m = as<int>(obj["m"], join_path(path, "m"));
        cfg.single.m = m;
        cfg.multi.m = m;
    }
    if (obj.contains("seed")) {
        const auto seed = as<std::uint64_t>(obj["seed"], join_path(path, "seed"));
        cfg.single.seed = seed;
        cfg.multi.seed = seed;
    }
    if (obj.contains("reference_arm")) {
        const auto arm = static_cast<TreatCode>(
            as<int>(obj["reference_arm"], join_path(path, "reference_arm")));
        cfg.single.reference_arm = arm;
        cfg.multi.reference_arm = arm;
    }
    if (obj.contains("estimator")) {
        const auto label =
            as<std::string>(obj["estimator"], join_path(path, "estimator"));
        cfg.single.estimator_label = label;
        cfg.multi.estimator_label = label;
    }
    if (obj.contains("terms"))
        cfg.model.terms = as<std::vector<std::string>>(obj["terms"], join_path(path, "terms"));
    if (obj.contains("include_arm"))
        cfg.model.include_arm = as<bool>(obj["include_arm"], join_path(path, "include_arm"));
    if (obj.contains("include_last_l"))
        cfg.model.include_last_l =
            as<bool>(obj["include_last_l"], join_path(path, "include_last_l"));
    try {
        if (cfg.combined)
            cfg.multi.check();
        else
            cfg.single.check();
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
    return cfg;
}

}  // namespace detail

inline PipelineConfig parse_config(const Json& root) {
    if (!root.is_object()) throw ConfigError("", "config root must be an object");
    detail::expect_keys(root, "",
                        {"version", "seed", "timeline", "censored_is_one", "dgp", "estimand",
                         "estimator", "mi", "report_format"});

    PipelineConfig cfg;
    if (root.contains("version")) cfg.version = detail::as<int>(root["version"], "version");
    if (cfg.version != 1) throw ConfigError("version", "unsupported config version");
    if (root.contains("seed")) cfg.seed = detail::as<std::uint64_t>(root["seed"], "seed");

    const Json& tl = detail::require(root, "", "timeline");
    if (!tl.is_object()) throw ConfigError("timeline", "must be an object");
    detail::expect_keys(tl, "timeline", {"k", "unit"});
    cfg.timeline.k = detail::as<int>(detail::require(tl, "timeline", "k"), "timeline.k");
    if (cfg.timeline.k < 1) throw ConfigError("timeline.k", "must be at least 1");
    if (tl.contains("unit"))
        cfg.timeline.unit = detail::as<std::string>(tl["unit"], "timeline.unit");

    if (root.contains("censored_is_one")) {
        cfg.censored_is_one = detail::as<bool>(root["censored_is_one"], "censored_is_one");
        if (!cfg.censored_is_one)
            throw ConfigError("censored_is_one",
                              "only the censored=1 spelling is supported");
    }
    if (root.contains("report_format")) {
        cfg.report_format = detail::as<std::string>(root["report_format"], "report_format");
        if (cfg.report_format != "json" && cfg.report_format != "csv")
            throw ConfigError("report_format", "must be json or csv");
    }

    if (root.contains("dgp"))
        cfg.dgp = detail::parse_dgp(root["dgp"], "dgp", cfg.timeline, cfg.seed);

    if (root.contains("estimand")) {
        const Json& est = root["estimand"];
        if (!est.is_object()) throw ConfigError("estimand", "must be an object");
        detail::expect_keys(est, "estimand", {"summary", "regimes", "horizon", "plan"});
        EstimandSpec spec;
        spec.summary = parse_summary(detail::as<std::string>(
            detail::require(est, "estimand", "summary"), "estimand.summary"));
        const Json& regimes = detail::require(est, "estimand", "regimes");
        if (!regimes.is_array()) throw ConfigError("estimand.regimes", "must be an array");
        std::size_t i = 0;
        for (const auto& regime : regimes)
            spec.regimes.push_back(detail::parse_regime(
                regime, "estimand.regimes[" + std::to_string(i++) + "]", cfg.timeline));
        spec.horizon = detail::as<int>(detail::require(est, "estimand", "horizon"),
                                       "estimand.horizon");
        if (est.contains("plan")) spec.plan = detail::parse_plan(est["plan"], "estimand.plan");
        try {
            spec.check(cfg.timeline);
        } catch (const Error& e) {
            throw ConfigError("estimand", e.what());
        }
        cfg.estimand = std::move(spec);
    }

    if (root.contains("estimator"))
        cfg.estimator = detail::parse_estimator(root["estimator"], "estimator");
    if (root.contains("mi")) cfg.mi = detail::parse_mi(root["mi"], "mi", cfg.seed);
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    Json root;
    try {
        root = Json::parse(read_text_file(path));
    } catch (const Json::exception& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(root);
}

}  // namespace tte
