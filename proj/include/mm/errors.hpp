#pragma once

#include <stdexcept>
#include <string>

namespace mm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text or files. Carries a 1-based position when known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
    ParseError(const std::string& msg, int line, int column)
        : Error(msg + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_ = 0;
    int column_ = 0;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class MetricError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class StateError : public Error {
public:
    using Error::Error;
};

// Remote embedding failures; index points at the offending batch entry (-1 when transport-level).
class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& msg, int batch_index = -1)
        : Error(batch_index < 0 ? msg : msg + " (batch index " + std::to_string(batch_index) + ")"),
          batch_index_(batch_index) {}

    int batch_index() const { return batch_index_; }

private:
    int batch_index_ = -1;
};

// Freeze-audit violations and other internal-consistency failures.
class IntegrityError : public Error {
public:
    using Error::Error;
};

// A command was run before the stage that produces its inputs.
class MissingArtifactError : public Error {
public:
    using Error::Error;
};

}  // namespace mm
