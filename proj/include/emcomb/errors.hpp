#pragma once

#include <stdexcept>
#include <string>

namespace emcomb {

/// Root of every error the library throws. `code()` is a stable identifier
/// used in sweep records and CLI diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Bad user input: parameters, configs, plans, flags.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config_error", what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io_error", what) {}
};

/// Anything that fails for numerical reasons. The CLI maps this family to
/// exit code 3.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error("numerical_error", what) {}

protected:
    NumericalError(std::string code, const std::string& what) : Error(std::move(code), what) {}
};

class InvalidStateError : public NumericalError {
public:
    explicit InvalidStateError(const std::string& what) : NumericalError("invalid_state", what) {}
};

class NotAFixedPointError : public NumericalError {
public:
    explicit NotAFixedPointError(const std::string& what)
        : NumericalError("not_a_fixed_point", what) {}
};

class BracketError : public NumericalError {
public:
    explicit BracketError(const std::string& what) : NumericalError("bracket_error", what) {}
};

class FitError : public NumericalError {
public:
    explicit FitError(const std::string& what) : NumericalError("ill_conditioned_fit", what) {}
};

class InsufficientDataError : public NumericalError {
public:
    explicit InsufficientDataError(const std::string& what)
        : NumericalError("insufficient_data", what) {}
};

class AmbiguityError : public NumericalError {
public:
    explicit AmbiguityError(const std::string& what) : NumericalError("lattice_ambiguity", what) {}
};

class TruncationError : public NumericalError {
public:
    TruncationError(const std::string& what, int required_order)
        : NumericalError("bessel_truncation", what), required_order_(required_order) {}

    [[nodiscard]] int required_order() const noexcept { return required_order_; }

private:
    int required_order_;
};

class IndeterminateOutcomeError : public NumericalError {
public:
    explicit IndeterminateOutcomeError(const std::string& what)
        : NumericalError("indeterminate_outcome", what) {}
};

}  // namespace emcomb
