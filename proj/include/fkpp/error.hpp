#pragma once

#include <stdexcept>
#include <string>

namespace fkpp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

// Carries the estimated error bound of the failed computation.
class NumericError : public Error {
public:
    NumericError(const std::string& what, double bound) : Error(what), bound_(bound) {}
    double bound() const { return bound_; }

private:
    double bound_;
};

class BufferOverrun : public Error {
public:
    BufferOverrun(const std::string& what, double max_safe_t) : Error(what), max_safe_t_(max_safe_t) {}
    double max_safe_t() const { return max_safe_t_; }

private:
    double max_safe_t_;
};

class RangeViolation : public Error {
public:
    RangeViolation(const std::string& what, double time, double value)
        : Error(what), time_(time), value_(value) {}
    double time() const { return time_; }
    double value() const { return value_; }

private:
    double time_;
    double value_;
};

class BlowUp : public Error {
public:
    BlowUp(const std::string& what, double time) : Error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

class ScheduleInfeasible : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class CoverageError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line) : Error(format(what, line)), line_(line) {}
    int line() const { return line_; }

private:
    static std::string format(const std::string& what, int line) {
        return line > 0 ? "line " + std::to_string(line) + ": " + what : what;
    }
    int line_;
};

}  // namespace fkpp
