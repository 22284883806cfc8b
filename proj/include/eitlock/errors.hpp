#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace eitlock {

// Base for every error the library raises. `kind()` is a stable machine tag
// used by the CLI when it writes an error record.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

struct QuadratureNotConverged : Error {
    explicit QuadratureNotConverged(const std::string& what) : Error("quadrature_not_converged", what) {}
};

struct NoCrossing : Error {
    explicit NoCrossing(const std::string& what) : Error("no_crossing", what) {}
};

struct AmbiguousCrossing : Error {
    explicit AmbiguousCrossing(const std::string& what) : Error("ambiguous_crossing", what) {}
};

struct WrongSign : Error {
    explicit WrongSign(const std::string& what) : Error("wrong_sign", what) {}
};

struct BudgetExceeded : Error {
    explicit BudgetExceeded(const std::string& what) : Error("budget_exceeded", what) {}
};

struct ResolutionError : Error {
    explicit ResolutionError(const std::string& what) : Error("resolution", what) {}
};

struct InsufficientSamples : Error {
    explicit InsufficientSamples(const std::string& what) : Error("insufficient_samples", what) {}
};

struct FitError : Error {
    explicit FitError(const std::string& what) : Error("fit", what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error("io", what) {}
};

// Aggregated validation failure; each entry names the field and the violated constraint.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error("config", join(problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string out = "invalid configuration:";
        for (const auto& s : p) out += "\n  " + s;
        return out;
    }
    std::vector<std::string> problems_;
};

}  // namespace eitlock
