#pragma once

#include <stdexcept>
#include <string>

namespace tte {

// Base class for all toolkit failures that are not data-quality findings
// (those are reported as Violation lists, see trial_data.hpp).
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raw record contradicts the encoding conventions (e.g. an event recorded
// inside an already-censored stretch).
struct ConventionConflictError : Error {
    ConventionConflictError(const std::string& subject, int month, const std::string& what_happened)
        : Error("convention conflict for subject '" + subject + "' at month " +
                std::to_string(month) + ": " + what_happened),
          subject_id(subject), month(month) {}
    std::string subject_id;
    int month;
};

struct PlanError : Error {
    using Error::Error;
};

struct SingularDesignError : Error {
    using Error::Error;
};

struct IdentifiabilityError : Error {
    IdentifiabilityError(int stage, const std::string& msg)
        : Error("stage " + std::to_string(stage) + ": " + msg), stage(stage) {}
    int stage;
};

struct ConfigError : Error {
    ConfigError(const std::string& field_path, const std::string& msg)
        : Error("config field '" + field_path + "': " + msg), field(field_path) {}
    std::string field;
};

struct IoError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

}  // namespace tte
