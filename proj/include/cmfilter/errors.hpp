#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cmf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad model definition, e.g. a covariance map that is not PSD somewhere.
class ModelError : public Error {
public:
    using Error::Error;
};

class AssumptionViolation : public Error {
public:
    AssumptionViolation(std::string constant, std::string probe, double measured, double declared);

    const std::string& constant() const { return constant_; }
    const std::string& probe() const { return probe_; }
    double measured() const { return measured_; }
    double declared() const { return declared_; }

private:
    std::string constant_;
    std::string probe_;
    double measured_;
    double declared_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ConstructionError : public Error {
public:
    ConstructionError(const std::string& what, std::int64_t row) : Error(what), row_(row) {}
    std::int64_t row() const { return row_; }

private:
    std::int64_t row_;
};

class PositiveDefinitenessError : public Error {
public:
    using Error::Error;
};

class DegenerateUpdateError : public Error {
public:
    DegenerateUpdateError(const std::string& what, double max_log_likelihood)
        : Error(what), max_log_likelihood_(max_log_likelihood) {}
    double max_log_likelihood() const { return max_log_likelihood_; }

private:
    double max_log_likelihood_;
};

class BudgetExceeded : public Error {
public:
    BudgetExceeded(const std::string& what, double required) : Error(what), required_(required) {}
    double required() const { return required_; }

private:
    double required_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input file; row is 1-based over the whole file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::int64_t row) : Error(what), row_(row) {}
    std::int64_t row() const { return row_; }

private:
    std::int64_t row_;
};

}  // namespace cmf
