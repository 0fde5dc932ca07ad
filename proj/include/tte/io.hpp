#pragma once

// CSV serialization of the dataset shapes. Wide layout per dataset row:
// id, A0..A{K-1}, C0..C{K-1}, Y1..YK, W_<name>..., L{t}_<name>...
// NA is spelled `NA`; censoring is spelled 1 (censored) / 0 (uncensored).

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tte/csv.hpp"
#include "tte/discretize.hpp"
#include "tte/errors.hpp"
#include "tte/simulate.hpp"
#include "tte/strategy.hpp"
#include "tte/trial_data.hpp"

namespace tte {

namespace detail {

inline std::string treat_cell(TreatCode a) {
    return a == kTreatAbsent ? "NA" : std::to_string(a);
}

inline TreatCode parse_treat(const std::string& cell, const std::string& where) {
    if (cell == "NA") return kTreatAbsent;
    const long v = parse_long(cell, where);
    if (v < 0 || v > 32767) throw IoError("treatment code out of range at " + where);
    return static_cast<TreatCode>(v);
}

inline std::string outcome_cell(Outcome y) {
    switch (y) {
        case Outcome::no: return "0";
        case Outcome::yes: return "1";
        case Outcome::na: return "NA";
    }
    return "NA";
}

inline Outcome parse_outcome(const std::string& cell, const std::string& where) {
    if (cell == "0") return Outcome::no;
    if (cell == "1") return Outcome::yes;
    if (cell == "NA") return Outcome::na;
    throw IoError("unparseable outcome '" + cell + "' at " + where);
}

inline Censor parse_censor(const std::string& cell, const std::string& where) {
    if (cell == "0") return Censor::uncensored;
    if (cell == "1") return Censor::censored;
    throw IoError("unparseable censor mark '" + cell + "' at " + where);
}

inline std::string cell_at(const CsvTable& table, std::size_t row, std::size_t col) {
    return table.rows[row][col];
}

inline std::string where(std::size_t row, const std::string& col) {
    // +2: 1-based with the header on line 1
    return "row " + std::to_string(row + 2) + ", column " + col;
}

}  // namespace detail

inline CsvTable dataset_to_csv(const TrialDataset& ds) {
    const int k = ds.timeline.k;
    CsvTable table;
    table.header.push_back("id");
    for (int t = 0; t < k; ++t) table.header.push_back("A" + std::to_string(t));
    for (int t = 0; t < k; ++t) table.header.push_back("C" + std::to_string(t));
    for (int t = 1; t <= k; ++t) table.header.push_back("Y" + std::to_string(t));
    for (const auto& name : ds.covariate_names) table.header.push_back("W_" + name);
    for (int t = 1; t <= k - 1; ++t)
        for (const auto& name : ds.l_covariate_names)
            table.header.push_back("L" + std::to_string(t) + "_" + name);

    for (const auto& rec : ds.subjects) {
        std::vector<std::string> row;
        row.push_back(rec.id);
        for (int t = 0; t < k; ++t) row.push_back(detail::treat_cell(rec.a[t]));
        for (int t = 0; t < k; ++t)
            row.push_back(rec.c[t] == Censor::censored ? "1" : "0");
        for (int t = 1; t <= k; ++t) row.push_back(detail::outcome_cell(rec.y[t - 1]));
        for (double w : rec.w) row.push_back(format_double(w));
        for (int t = 1; t <= k - 1; ++t) {
            const auto& cell = rec.l[t - 1];
            for (std::size_t j = 0; j < ds.l_covariate_names.size(); ++j)
                row.push_back(cell ? format_double((*cell)[j]) : "NA");
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

// Strict reader: every header column must be recognized and every expected
// column present. K and the covariate names are inferred from the header.
inline TrialDataset csv_to_dataset(const CsvTable& table, const std::string& unit = "month") {
    int k = 0;
    std::vector<std::string> w_names;
    std::vector<std::string> l_names;
    for (const auto& h : table.header) {
        if (h == "id") continue;
        if (h.rfind("W_", 0) == 0) {
            w_names.push_back(h.substr(2));
            continue;
        }
        if (h.size() >= 2 && (h[0] == 'A' || h[0] == 'C')) {
            bool digits = true;
            for (std::size_t i = 1; i < h.size(); ++i)
                digits = digits && h[i] >= '0' && h[i] <= '9';
            if (digits) {
                k = std::max(k, static_cast<int>(std::stol(h.substr(1))) + 1);
                continue;
            }
        }
        if (h.size() >= 2 && h[0] == 'Y') {
            bool digits = true;
            for (std::size_t i = 1; i < h.size(); ++i)
                digits = digits && h[i] >= '0' && h[i] <= '9';
            if (digits) {
                k = std::max(k, static_cast<int>(std::stol(h.substr(1))));
                continue;
            }
        }
        if (h.size() >= 2 && h[0] == 'L') {
            const auto us = h.find('_');
            if (us != std::string::npos && us > 1) {
                bool digits = true;
                for (std::size_t i = 1; i < us; ++i)
                    digits = digits && h[i] >= '0' && h[i] <= '9';
                if (digits) {
                    const std::string name = h.substr(us + 1);
                    bool seen = false;
                    for (const auto& n : l_names) seen = seen || n == name;
                    if (!seen) l_names.push_back(name);
                    continue;
                }
            }
        }
        throw IoError("csv: unknown column '" + h + "'");
    }
    if (k < 1) throw IoError("csv: no follow-up columns found");

    std::vector<std::size_t> a_cols, c_cols, y_cols, w_cols;
    for (int t = 0; t < k; ++t) a_cols.push_back(table.column("A" + std::to_string(t)));
    for (int t = 0; t < k; ++t) c_cols.push_back(table.column("C" + std::to_string(t)));
    for (int t = 1; t <= k; ++t) y_cols.push_back(table.column("Y" + std::to_string(t)));
    for (const auto& name : w_names) w_cols.push_back(table.column("W_" + name));
    std::vector<std::vector<std::size_t>> l_cols;  // [t-1][name]
    for (int t = 1; t <= k - 1; ++t) {
        std::vector<std::size_t> cols;
        for (const auto& name : l_names)
            cols.push_back(table.column("L" + std::to_string(t) + "_" + name));
        l_cols.push_back(std::move(cols));
    }
    const std::size_t id_col = table.column("id");

    TrialDataset ds;
    ds.timeline = Timeline{k, unit};
    ds.covariate_names = w_names;
    ds.l_covariate_names = l_names;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        SubjectRecord rec;
        rec.id = detail::cell_at(table, r, id_col);
        for (int t = 0; t < k; ++t)
            rec.a.push_back(detail::parse_treat(detail::cell_at(table, r, a_cols[t]),
                                                detail::where(r, "A" + std::to_string(t))));
        for (int t = 0; t < k; ++t)
            rec.c.push_back(detail::parse_censor(detail::cell_at(table, r, c_cols[t]),
                                                 detail::where(r, "C" + std::to_string(t))));
        for (int t = 1; t <= k; ++t)
            rec.y.push_back(detail::parse_outcome(detail::cell_at(table, r, y_cols[t - 1]),
                                                  detail::where(r, "Y" + std::to_string(t))));
        for (std::size_t j = 0; j < w_names.size(); ++j)
            rec.w.push_back(parse_double(detail::cell_at(table, r, w_cols[j]),
                                         detail::where(r, "W_" + w_names[j])));
        for (int t = 1; t <= k - 1; ++t) {
            bool all_na = true, any_na = false;
            std::vector<double> values;
            for (std::size_t j = 0; j < l_names.size(); ++j) {
                const std::string cell = detail::cell_at(table, r, l_cols[t - 1][j]);
                if (cell == "NA") {
                    any_na = true;
                } else {
                    all_na = false;
                    values.push_back(parse_double(
                        cell, detail::where(r, "L" + std::to_string(t) + "_" + l_names[j])));
                }
            }
            if (any_na && !all_na)
                throw IoError("csv: partially missing L cell at " +
                              detail::where(r, "L" + std::to_string(t)));
            rec.l.push_back(all_na ? LCell{} : LCell{std::move(values)});
        }
        if (l_names.empty()) rec.l.assign(static_cast<std::size_t>(std::max(0, k - 1)), LCell{});
        ds.subjects.push_back(std::move(rec));
    }

    for (const auto& rec : ds.subjects) {
        if (!rec.a.empty()) {
            bool known = false;
            for (const auto& [code, label] : ds.treatment_labels) known = known || code == rec.a[0];
            if (!known && rec.a[0] != kTreatAbsent)
                ds.treatment_labels.emplace(rec.a[0], "arm " + std::to_string(rec.a[0]));
        }
    }
    return ds;
}

inline CsvTable competing_to_csv(const CompetingDataset& ds) {
    const int k = ds.timeline.k;
    CsvTable table;
    table.header.push_back("id");
    for (int t = 0; t < k; ++t) table.header.push_back("A" + std::to_string(t));
    for (int t = 0; t < k; ++t) table.header.push_back("C" + std::to_string(t));
    for (int t = 1; t <= k; ++t) table.header.push_back("YPE" + std::to_string(t));
    for (int t = 1; t <= k; ++t) table.header.push_back("YCE" + std::to_string(t));
    for (const auto& name : ds.covariate_names) table.header.push_back("W_" + name);
    for (int t = 1; t <= k - 1; ++t)
        for (const auto& name : ds.l_covariate_names)
            table.header.push_back("L" + std::to_string(t) + "_" + name);

    for (const auto& rec : ds.subjects) {
        std::vector<std::string> row;
        row.push_back(rec.id);
        for (int t = 0; t < k; ++t) row.push_back(detail::treat_cell(rec.a[t]));
        for (int t = 0; t < k; ++t)
            row.push_back(rec.c[t] == Censor::censored ? "1" : "0");
        for (int t = 1; t <= k; ++t) row.push_back(detail::outcome_cell(rec.y_pe[t - 1]));
        for (int t = 1; t <= k; ++t) row.push_back(detail::outcome_cell(rec.y_ce[t - 1]));
        for (double w : rec.w) row.push_back(format_double(w));
        for (int t = 1; t <= k - 1; ++t) {
            const auto& cell = rec.l[t - 1];
            for (std::size_t j = 0; j < ds.l_covariate_names.size(); ++j)
                row.push_back(cell ? format_double((*cell)[j]) : "NA");
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline CsvTable ices_to_csv(const IceRecords& ices) {
    CsvTable table;
    table.header = {"id", "kind", "month", "terminal"};
    for (const auto& ice : ices)
        table.rows.push_back({ice.subject_id, ice.kind, std::to_string(ice.month),
                              ice.terminal ? "1" : "0"});
    return table;
}

inline IceRecords csv_to_ices(const CsvTable& table) {
    const std::size_t id = table.column("id");
    const std::size_t kind = table.column("kind");
    const std::size_t month = table.column("month");
    const std::size_t terminal = table.column("terminal");
    IceRecords ices;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        IceRecord ice;
        ice.subject_id = table.rows[r][id];
        ice.kind = table.rows[r][kind];
        ice.month = static_cast<int>(parse_long(table.rows[r][month], detail::where(r, "month")));
        const std::string& term = table.rows[r][terminal];
        if (term == "1")
            ice.terminal = true;
        else if (term == "0")
            ice.terminal = false;
        else
            throw IoError("unparseable terminal flag '" + term + "' at " +
                          detail::where(r, "terminal"));
        ices.push_back(std::move(ice));
    }
    return ices;
}

// Continuous input rows for the discretize command: required id, tY, tC;
// optional tI, kind, terminal, arm, W_<name> columns.
struct RawTimesRow {
    std::string id;
    EventTimes times;
    std::string kind;
    bool terminal = false;
    TreatCode arm = 0;
    std::vector<double> w;
};

struct RawTimesTable {
    std::vector<RawTimesRow> rows;
    std::vector<std::string> covariate_names;
};

inline RawTimesTable csv_to_times(const CsvTable& table) {
    const std::size_t id = table.column("id");
    const std::size_t ty = table.column("tY");
    const std::size_t tc = table.column("tC");
    const bool has_ti = table.has_column("tI");
    const bool has_kind = table.has_column("kind");
    const bool has_terminal = table.has_column("terminal");
    const bool has_arm = table.has_column("arm");

    RawTimesTable out;
    std::vector<std::size_t> w_cols;
    for (std::size_t j = 0; j < table.header.size(); ++j)
        if (table.header[j].rfind("W_", 0) == 0) {
            out.covariate_names.push_back(table.header[j].substr(2));
            w_cols.push_back(j);
        }

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        RawTimesRow row;
        row.id = table.rows[r][id];
        row.times.time_to_event = parse_double(table.rows[r][ty], detail::where(r, "tY"));
        row.times.time_to_censoring = parse_double(table.rows[r][tc], detail::where(r, "tC"));
        if (has_ti) {
            const std::string& cell = table.rows[r][table.column("tI")];
            if (cell != "NA" && !cell.empty())
                row.times.time_to_ice = parse_double(cell, detail::where(r, "tI"));
        }
        if (has_kind) row.kind = table.rows[r][table.column("kind")];
        if (has_terminal) {
            const std::string& cell = table.rows[r][table.column("terminal")];
            row.terminal = cell == "1";
        }
        if (has_arm)
            row.arm = detail::parse_treat(table.rows[r][table.column("arm")],
                                          detail::where(r, "arm"));
        for (std::size_t j : w_cols)
            row.w.push_back(parse_double(table.rows[r][j], detail::where(r, table.header[j])));
        out.rows.push_back(std::move(row));
    }
    return out;
}

inline CsvTable potentials_to_csv(const std::vector<PotentialSubject>& pots,
                                  const std::vector<std::string>& covariate_names) {
    CsvTable table;
    table.header = {"id",           "assigned",       "t_event_treated", "t_event_control",
                    "t_censoring",  "t_ice_treated",  "t_ice_control",   "event_by_k_treated",
                    "event_by_k_control", "ice_by_k_treated", "ice_by_k_control", "stratum"};
    for (const auto& name : covariate_names) table.header.push_back("W_" + name);
    for (const auto& p : pots) {
        std::vector<std::string> row = {p.id,
                                        std::to_string(p.assigned),
                                        format_double(p.t_event_treated),
                                        format_double(p.t_event_control),
                                        format_double(p.t_censoring),
                                        format_double(p.t_ice_treated),
                                        format_double(p.t_ice_control),
                                        p.event_by_k_treated ? "1" : "0",
                                        p.event_by_k_control ? "1" : "0",
                                        p.ice_by_k_treated ? "1" : "0",
                                        p.ice_by_k_control ? "1" : "0",
                                        stratum_name(p.stratum)};
        for (double w : p.w) row.push_back(format_double(w));
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace tte
