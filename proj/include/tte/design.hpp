#pragma once

// Tiny design-matrix vocabulary: terms like "W1", "W2^2", "W1*W3" over the
// baseline covariate names. The intercept is always implicit column 0.

#include <Eigen/Dense>
#include <cctype>
#include <string>
#include <vector>

#include "tte/errors.hpp"
#include "tte/trial_data.hpp"

namespace tte {

struct TermFactor {
    std::size_t index = 0;  // into the covariate vector
    int power = 1;
};

struct Term {
    std::string text;
    std::vector<TermFactor> factors;

    double value(const std::vector<double>& w) const {
        double v = 1.0;
        for (const auto& f : factors) {
            double base = w[f.index];
            for (int p = 0; p < f.power; ++p) v *= base;
        }
        return v;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace detail

// Grammar: term := factor ('*' factor)*; factor := NAME ('^' DIGITS)?
inline Term parse_term(const std::string& text, const std::vector<std::string>& names) {
    Term term;
    term.text = text;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t star = text.find('*', pos);
        std::string piece = detail::trim(
            text.substr(pos, star == std::string::npos ? std::string::npos : star - pos));
        if (piece.empty()) throw DomainError("empty factor in term '" + text + "'");

        std::string name = piece;
        int power = 1;
        if (auto caret = piece.find('^'); caret != std::string::npos) {
            name = detail::trim(piece.substr(0, caret));
            const std::string exp = detail::trim(piece.substr(caret + 1));
            if (exp.empty()) throw DomainError("missing exponent in term '" + text + "'");
            for (char ch : exp)
                if (!std::isdigit(static_cast<unsigned char>(ch)))
                    throw DomainError("exponent must be a positive integer in term '" + text + "'");
            power = std::stoi(exp);
            if (power < 1) throw DomainError("exponent must be at least 1 in term '" + text + "'");
        }

        std::size_t idx = names.size();
        for (std::size_t j = 0; j < names.size(); ++j)
            if (names[j] == name) {
                idx = j;
                break;
            }
        if (idx == names.size())
            throw DomainError("unknown covariate '" + name + "' in term '" + text + "'");
        term.factors.push_back({idx, power});

        if (star == std::string::npos) break;
        pos = star + 1;
    }
    return term;
}

inline std::vector<Term> parse_terms(const std::vector<std::string>& texts,
                                     const std::vector<std::string>& names) {
    std::vector<Term> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(parse_term(t, names));
    return out;
}

// Default design: one linear term per covariate.
inline std::vector<Term> linear_terms(const std::vector<std::string>& names) {
    std::vector<Term> out;
    for (std::size_t j = 0; j < names.size(); ++j) out.push_back(parse_term(names[j], names));
    return out;
}

// Most recent observed time-dependent covariates strictly before follow-up t,
// falling back to zeros when none were observed yet.
inline std::vector<double> last_l_before(const SubjectRecord& rec, int t, std::size_t l_dim) {
    for (int j = t - 2; j >= 0; --j)
        if (j < static_cast<int>(rec.l.size()) && rec.l[j].has_value()) return *rec.l[j];
    return std::vector<double>(l_dim, 0.0);
}

}  // namespace tte
