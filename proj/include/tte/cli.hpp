#pragma once

// Command-line front end. Subcommands: simulate, discretize, transform,
// estimate, sensitivity, validate. Every command reads one JSON config,
// writes artifacts atomically, and emits a machine-readable JSON report that
// echoes the config and the input hash so results can be regenerated.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tte/config.hpp"
#include "tte/csv.hpp"
#include "tte/discretize.hpp"
#include "tte/errors.hpp"
#include "tte/estimand.hpp"
#include "tte/estimate.hpp"
#include "tte/gcomp.hpp"
#include "tte/io.hpp"
#include "tte/mi.hpp"
#include "tte/rng.hpp"
#include "tte/simulate.hpp"
#include "tte/strategy.hpp"
#include "tte/survival.hpp"
#include "tte/trial_data.hpp"

#include "CLI11.hpp"

namespace tte {

inline constexpr const char* kToolkitVersion = "1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitValidation = 3;

namespace cli_detail {

inline std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

inline std::string file_hash(const std::string& path) {
    return hex64(fnv1a64(read_text_file(path)));
}

inline Json violations_json(const std::vector<Violation>& violations) {
    Json arr = Json::array();
    for (const auto& v : violations) {
        Json item;
        item["subject_id"] = v.subject_id;
        item["index"] = v.index;
        item["rule"] = v.rule;
        item["detail"] = v.detail;
        arr.push_back(std::move(item));
    }
    return arr;
}

struct ValidationFailure {
    std::vector<Violation> violations;
};

// Parse, apply the conventions, and insist the result is clean.
inline TrialDataset load_dataset(const std::string& path, const PipelineConfig& cfg) {
    auto table = parse_csv(read_text_file(path));
    auto raw = csv_to_dataset(table, cfg.timeline.unit);
    if (raw.timeline.k != cfg.timeline.k)
        throw ConfigError("timeline.k", "config says K=" + std::to_string(cfg.timeline.k) +
                                            " but '" + path + "' has K=" +
                                            std::to_string(raw.timeline.k));
    auto ds = apply_conventions(raw);
    auto violations = validate_dataset(ds);
    if (!violations.empty()) throw ValidationFailure{std::move(violations)};
    return ds;
}

inline Json estimate_json(const EstimateResult& res) {
    Json out;
    out["estimand"] = res.estimand;
    out["method"] = res.method;
    out["point"] = res.point;
    out["se"] = res.se ? Json(*res.se) : Json(nullptr);
    if (res.ci95)
        out["ci95"] = Json::array({res.ci95->first, res.ci95->second});
    else
        out["ci95"] = Json(nullptr);
    out["n_used"] = res.n_used;
    out["warnings"] = res.warnings;
    return out;
}

inline Json pooled_json(const PooledEstimate& pooled) {
    Json out;
    out["point"] = pooled.point;
    out["within_var"] = pooled.within_var;
    out["between_var"] = pooled.between_var;
    out["total_var"] = pooled.total_var;
    out["df"] = std::isinf(pooled.df) ? Json("inf") : Json(pooled.df);
    out["ci95"] = Json::array({pooled.ci95.first, pooled.ci95.second});
    out["m"] = pooled.m;
    return out;
}

inline Json report_skeleton(const std::string& command, const Json& config_echo,
                            const std::map<std::string, std::string>& input_hashes) {
    Json report;
    report["toolkit"] = "tte";
    report["toolkit_version"] = kToolkitVersion;
    report["command"] = command;
    report["config"] = config_echo;
    Json hashes;
    for (const auto& [name, hash] : input_hashes) hashes[name] = hash;
    report["input_hash"] = std::move(hashes);
    return report;
}

inline void require_constant_regime(const RegimeSpec& regime, const std::string& method) {
    for (auto code : regime.abar)
        if (code != regime.abar[0])
            throw DomainError(method + " requires a constant regime (arm restriction)");
}

inline EstimateResult estimate_trial(const TrialDataset& ds, const RegimeSpec& regime,
                                     int horizon, const EstimatorConfig& est) {
    switch (est.kind) {
        case EstimatorKind::km: {
            require_constant_regime(regime, "kaplan_meier");
            auto curve = km_curve(ds, regime.abar[0], horizon);
            EstimateResult res;
            res.estimand = "survival_at_" + std::to_string(horizon);
            res.method = "kaplan_meier";
            res.point = curve.survival_at(horizon);
            res.se = curve.greenwood_se[static_cast<std::size_t>(horizon - 1)];
            res.n_used = curve.at_risk[0];
            res.finalize_ci();
            return res;
        }
        case EstimatorKind::ipcw: {
            IpcwOptions opts;
            opts.censor = est.censor;
            opts.horizon = horizon;
            auto res = ipcw_survival(ds, regime, opts);
            res.finalize_ci();
            return res;
        }
        case EstimatorKind::gcomp: {
            GcompOptions opts;
            opts.terms = est.terms;
            opts.include_last_l = est.include_last_l;
            opts.saturated = est.saturated;
            opts.horizon = horizon;
            opts.censor = est.censor;
            opts.bootstrap_b = est.bootstrap_b;
            opts.bootstrap_seed = est.bootstrap_seed;
            auto res = seq_gcomp(ds, regime, opts);
            res.finalize_ci();
            return res;
        }
        case EstimatorKind::tmle: {
            GcompOptions opts;
            opts.terms = est.terms;
            opts.include_last_l = est.include_last_l;
            opts.saturated = est.saturated;
            opts.horizon = horizon;
            opts.censor = est.censor;
            auto res = targeted_update(ds, regime, opts);
            res.finalize_ci();
            return res;
        }
        case EstimatorKind::aalen_johansen:
            throw DomainError(
                "aalen_johansen needs a competing-risk dataset; add a COMPETING_RISK plan entry");
    }
    throw DomainError("unknown estimator");
}

inline EstimateResult estimate_competing(const CompetingDataset& cds, const RegimeSpec& regime,
                                         int horizon, const EstimatorConfig& est) {
    if (est.kind != EstimatorKind::aalen_johansen)
        throw DomainError("a competing-risk dataset supports only the aalen_johansen method");
    require_constant_regime(regime, "aalen_johansen");
    auto curve = aalen_johansen(cds, regime.abar[0], horizon);
    EstimateResult res;
    res.estimand = "cif_pe_at_" + std::to_string(horizon);
    res.method = "aalen_johansen";
    res.point = curve.cif_pe[static_cast<std::size_t>(horizon - 1)];
    res.n_used = curve.at_risk[0];
    res.warnings = curve.warnings;
    return res;
}

inline EstimateResult estimate_any(const AnyDataset& data, const RegimeSpec& regime, int horizon,
                                   const EstimatorConfig& est) {
    if (std::holds_alternative<TrialDataset>(data))
        return estimate_trial(std::get<TrialDataset>(data), regime, horizon, est);
    return estimate_competing(std::get<CompetingDataset>(data), regime, horizon, est);
}

inline Json run_estimand(const AnyDataset& data, const EstimandSpec& spec,
                         const EstimatorConfig& est) {
    Json out;
    if (spec.summary == SummaryKind::sace_oracle)
        throw DomainError(
            "SACE_ORACLE is computable only from simulated potential outcomes; use the simulate "
            "command with --oracle");
    if (spec.summary == SummaryKind::survival_difference) {
        auto e1 = estimate_any(data, spec.regimes[0], spec.horizon, est);
        auto e0 = estimate_any(data, spec.regimes[1], spec.horizon, est);
        auto diff = contrast(e1, e0);
        diff.finalize_ci();
        out["result"] = estimate_json(diff);
        out["per_regime"] = Json::array({estimate_json(e1), estimate_json(e0)});
        return out;
    }
    auto res = estimate_any(data, spec.regimes[0], spec.horizon, est);
    out["result"] = estimate_json(res);
    return out;
}

// strategy plan + ICE records -> analysis dataset (and censor attribution)
inline TransformResult transform_dataset(const TrialDataset& ds, const IceRecords& ices,
                                         const StrategyPlan& plan) {
    return compose_plan(ds, ices, plan);
}

inline MiEstimator make_mi_estimator(const EstimandSpec& spec, const EstimatorConfig& est) {
    return [spec, est](const TrialDataset& completed) {
        if (spec.summary == SummaryKind::survival_difference) {
            auto e1 = estimate_trial(completed, spec.regimes[0], spec.horizon, est);
            auto e0 = estimate_trial(completed, spec.regimes[1], spec.horizon, est);
            return contrast(e1, e0);
        }
        return estimate_trial(completed, spec.regimes[0], spec.horizon, est);
    };
}

}  // namespace cli_detail

inline int run_command(int argc, const char* const* argv) {
    using cli_detail::ValidationFailure;

    CLI::App app{"discrete-time time-to-event estimand toolkit"};
    app.require_subcommand(1);

    std::string config_path, input_path, ice_path, out_path, oracle_path, report_path;
    std::string attribution_path;
    std::optional<std::uint64_t> seed_override;
    std::string format;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", config_path, "pipeline config JSON");
        if (needs_config) opt->required();
        cmd->add_option("--seed", seed_override, "override the config seed");
        cmd->add_option("--format", format, "report format: json|csv");
    };

    auto* sim = app.add_subcommand("simulate", "generate a synthetic trial");
    add_common(sim, true);
    sim->add_option("--out", out_path, "dataset CSV path")->required();
    sim->add_option("--oracle", oracle_path, "potential-outcome oracle CSV path");
    sim->add_option("--ice", ice_path, "ICE records CSV path");
    sim->add_option("--report", report_path, "JSON report path");

    auto* dis = app.add_subcommand("discretize", "discretize continuous event times");
    add_common(dis, true);
    dis->add_option("--input", input_path, "continuous times CSV (id,tY,tC[,tI,...])")->required();
    dis->add_option("--out", out_path, "dataset CSV path")->required();
    dis->add_option("--ice", ice_path, "ICE records CSV output path");
    dis->add_option("--report", report_path, "JSON report path");

    auto* tra = app.add_subcommand("transform", "apply an ICE strategy plan");
    add_common(tra, true);
    tra->add_option("--input", input_path, "dataset CSV")->required();
    tra->add_option("--ice", ice_path, "ICE records CSV");
    tra->add_option("--out", out_path, "transformed dataset CSV path")->required();
    tra->add_option("--attribution", attribution_path, "censor-attribution CSV output path");
    tra->add_option("--report", report_path, "JSON report path");

    auto* est = app.add_subcommand("estimate", "estimate the configured estimand");
    add_common(est, true);
    est->add_option("--input", input_path, "dataset CSV")->required();
    est->add_option("--ice", ice_path, "ICE records CSV");
    est->add_option("--out", out_path, "result JSON path")->required();

    auto* sen = app.add_subcommand("sensitivity", "multiple-imputation sensitivity analysis");
    add_common(sen, true);
    sen->add_option("--input", input_path, "dataset CSV")->required();
    sen->add_option("--attribution", attribution_path, "censor-attribution CSV (combined runs)");
    sen->add_option("--out", out_path, "pooled result JSON path")->required();

    auto* val = app.add_subcommand("validate", "check a dataset against the conventions");
    add_common(val, false);
    val->add_option("--input", input_path, "dataset CSV")->required();
    val->add_option("--out", out_path, "violations JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        PipelineConfig cfg;
        Json config_echo = Json(nullptr);
        if (!config_path.empty()) {
            cfg = load_config(config_path);
            config_echo = Json::parse(read_text_file(config_path));
        }
        if (seed_override) cfg.seed = *seed_override;
        if (!format.empty()) {
            if (format != "json" && format != "csv")
                throw ConfigError("format", "must be json or csv");
            cfg.report_format = format;
        }

        std::map<std::string, std::string> hashes;
        if (!input_path.empty()) hashes["input"] = cli_detail::file_hash(input_path);

        if (sim->parsed()) {
            if (!cfg.dgp) throw ConfigError("dgp", "missing required field");
            DgpConfig dgp = *cfg.dgp;
            if (seed_override) dgp.seed = *seed_override;
            auto trial = simulate_trial(dgp);
            write_text_file(out_path, write_csv(dataset_to_csv(trial.data)));
            if (!ice_path.empty()) write_text_file(ice_path, write_csv(ices_to_csv(trial.ices)));

            Json report = cli_detail::report_skeleton("simulate", config_echo, hashes);
            report["seed"] = dgp.seed;
            report["n"] = dgp.n;
            report["artifacts"] = Json::array({out_path});
            if (!ice_path.empty()) report["artifacts"].push_back(ice_path);

            if (!oracle_path.empty()) {
                auto pots = simulate_potential(dgp);
                std::vector<std::string> names;
                for (std::size_t j = 0; j < dgp.w_dim(); ++j)
                    names.push_back("W" + std::to_string(j + 1));
                write_text_file(oracle_path, write_csv(potentials_to_csv(pots, names)));
                report["artifacts"].push_back(oracle_path);

                std::map<std::string, int> strata;
                for (const auto& p : pots) ++strata[stratum_name(p.stratum)];
                Json strata_json;
                for (const auto& [name, count] : strata) strata_json[name] = count;
                report["stratum_counts"] = std::move(strata_json);
                try {
                    report["sace_oracle"] = sace_oracle(pots);
                } catch (const IdentifiabilityError&) {
                    report["sace_oracle"] = Json(nullptr);
                }
            }
            if (!report_path.empty()) write_text_file(report_path, report.dump(2) + "\n");
            return kExitOk;
        }

        if (dis->parsed()) {
            auto times = csv_to_times(parse_csv(read_text_file(input_path)));
            TrialDataset ds;
            ds.timeline = cfg.timeline;
            ds.covariate_names = times.covariate_names;
            IceRecords ices;
            for (const auto& row : times.rows) {
                auto d = discretize_with_ice(cfg.timeline, row.times);
                ds.subjects.push_back(make_record(cfg.timeline, row.id, row.arm, row.w, d.base));
                if (d.ice_month) {
                    IceRecord ice;
                    ice.subject_id = row.id;
                    ice.kind = row.kind.empty() ? "ice" : row.kind;
                    ice.month = *d.ice_month;
                    ice.terminal = row.terminal;
                    ices.push_back(std::move(ice));
                }
            }
            for (const auto& rec : ds.subjects) {
                bool known = ds.treatment_labels.count(rec.a[0]) > 0;
                if (!known && rec.a[0] != kTreatAbsent)
                    ds.treatment_labels.emplace(rec.a[0], "arm " + std::to_string(rec.a[0]));
            }
            write_text_file(out_path, write_csv(dataset_to_csv(ds)));
            if (!ice_path.empty()) write_text_file(ice_path, write_csv(ices_to_csv(ices)));

            if (!report_path.empty()) {
                Json report = cli_detail::report_skeleton("discretize", config_echo, hashes);
                report["n"] = ds.subjects.size();
                report["ice_count"] = ices.size();
                report["artifacts"] = Json::array({out_path});
                if (!ice_path.empty()) report["artifacts"].push_back(ice_path);
                write_text_file(report_path, report.dump(2) + "\n");
            }
            return kExitOk;
        }

        if (val->parsed()) {
            auto table = parse_csv(read_text_file(input_path));
            const int k_hint = cfg.timeline.k;
            auto ds = csv_to_dataset(table, cfg.timeline.unit);
            if (!config_path.empty() && ds.timeline.k != k_hint)
                throw ConfigError("timeline.k", "config/data follow-up count mismatch");
            auto violations = validate_dataset(ds);
            Json out;
            out["violations"] = cli_detail::violations_json(violations);
            out["subject_count"] = ds.subjects.size();
            if (!out_path.empty()) write_text_file(out_path, out.dump(2) + "\n");
            if (!violations.empty()) {
                for (const auto& v : violations)
                    std::cerr << v.subject_id << " index " << v.index << " " << v.rule << ": "
                              << v.detail << "\n";
                return kExitValidation;
            }
            return kExitOk;
        }

        // Remaining commands all load a validated dataset.
        auto ds = cli_detail::load_dataset(input_path, cfg);

        if (tra->parsed()) {
            IceRecords ices;
            if (!ice_path.empty()) {
                hashes["ice"] = cli_detail::file_hash(ice_path);
                ices = csv_to_ices(parse_csv(read_text_file(ice_path)));
            }
            StrategyPlan plan = cfg.estimand ? cfg.estimand->plan : StrategyPlan{};
            auto result = cli_detail::transform_dataset(ds, ices, plan);

            if (std::holds_alternative<TrialDataset>(result.dataset))
                write_text_file(out_path,
                                write_csv(dataset_to_csv(std::get<TrialDataset>(result.dataset))));
            else
                write_text_file(out_path, write_csv(competing_to_csv(
                                              std::get<CompetingDataset>(result.dataset))));

            if (!attribution_path.empty()) {
                CsvTable table;
                table.header = {"id", "kind"};
                for (const auto& [id, kind] : result.censor_attribution)
                    table.rows.push_back({id, kind});
                write_text_file(attribution_path, write_csv(table));
            }
            if (!report_path.empty()) {
                Json report = cli_detail::report_skeleton("transform", config_echo, hashes);
                report["notes"] = result.notes;
                report["competing"] = std::holds_alternative<CompetingDataset>(result.dataset);
                report["attributed"] = result.censor_attribution.size();
                report["artifacts"] = Json::array({out_path});
                if (!attribution_path.empty()) report["artifacts"].push_back(attribution_path);
                write_text_file(report_path, report.dump(2) + "\n");
            }
            return kExitOk;
        }

        if (est->parsed()) {
            if (!cfg.estimand) throw ConfigError("estimand", "missing required field");
            if (!cfg.estimator) throw ConfigError("estimator", "missing required field");

            IceRecords ices;
            if (!ice_path.empty()) {
                hashes["ice"] = cli_detail::file_hash(ice_path);
                ices = csv_to_ices(parse_csv(read_text_file(ice_path)));
            }
            auto transformed = cli_detail::transform_dataset(ds, ices, cfg.estimand->plan);

            Json report = cli_detail::report_skeleton("estimate", config_echo, hashes);
            Json payload = cli_detail::run_estimand(transformed.dataset, *cfg.estimand,
                                                    *cfg.estimator);
            report.update(payload);
            report["transform_notes"] = transformed.notes;
            write_text_file(out_path, report.dump(2) + "\n");
            return kExitOk;
        }

        if (sen->parsed()) {
            if (!cfg.mi) throw ConfigError("mi", "missing required field");
            if (!cfg.estimand) throw ConfigError("estimand", "missing required field");
            if (!cfg.estimator) throw ConfigError("estimator", "missing required field");
            if (cfg.estimand->summary == SummaryKind::cif_at_k ||
                cfg.estimand->summary == SummaryKind::sace_oracle)
                throw ConfigError("estimand.summary",
                                  "sensitivity analysis supports survival summaries only");

            auto estimator = cli_detail::make_mi_estimator(*cfg.estimand, *cfg.estimator);
            MiRun run;
            if (cfg.mi->combined) {
                std::map<std::string, std::string> attribution;
                if (!attribution_path.empty()) {
                    hashes["attribution"] = cli_detail::file_hash(attribution_path);
                    auto table = parse_csv(read_text_file(attribution_path));
                    const std::size_t id = table.column("id");
                    const std::size_t kind = table.column("kind");
                    for (const auto& row : table.rows) attribution[row[id]] = row[kind];
                }
                run = combined_mi(ds, attribution, cfg.mi->multi, estimator, cfg.mi->model);
            } else {
                run = run_mi(ds, cfg.mi->single, estimator, cfg.mi->model);
            }

            Json report = cli_detail::report_skeleton("sensitivity", config_echo, hashes);
            report["pooled"] = cli_detail::pooled_json(run.pooled);
            Json per = Json::array();
            for (const auto& res : run.per_imputation) per.push_back(cli_detail::estimate_json(res));
            report["per_imputation"] = std::move(per);
            report["failures"] = run.failures;
            report["assumption"] =
                cfg.mi->combined ? Json("combined") : Json(assumption_name(cfg.mi->single.assumption));
            write_text_file(out_path, report.dump(2) + "\n");
            return kExitOk;
        }

        throw DomainError("no subcommand executed");
    } catch (const ValidationFailure& f) {
        std::cerr << "dataset failed validation:\n";
        for (const auto& v : f.violations)
            std::cerr << "  " << v.subject_id << " index " << v.index << " " << v.rule << ": "
                      << v.detail << "\n";
        return kExitValidation;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConventionConflictError& e) {
        std::cerr << "dataset failed validation:\n  " << e.what() << "\n";
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace tte
