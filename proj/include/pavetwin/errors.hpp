#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pavetwin {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    Ok = 0,
    Usage = 2,
    Data = 3,
    Numerical = 4,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::Data; }
};

// --- usage / configuration -------------------------------------------------

class ConfigError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::Usage; }
};

// --- data problems (exit 3) -------------------------------------------------

class DataError : public Error {
public:
    using Error::Error;
};

class MissingFile : public DataError {
public:
    explicit MissingFile(const std::string& path)
        : DataError("missing file: " + path), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& file, std::size_t row, std::size_t column, const std::string& what)
        : DataError(file + ": row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
          row_(row), column_(column) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class ValidationError : public DataError {
public:
    using DataError::DataError;
};

class MissingTarget : public DataError {
public:
    explicit MissingTarget(std::int64_t segment_id)
        : DataError("no distress record for segment " + std::to_string(segment_id)), segment_id_(segment_id) {}
    std::int64_t segment_id() const noexcept { return segment_id_; }

private:
    std::int64_t segment_id_;
};

class UnknownSegment : public DataError {
public:
    explicit UnknownSegment(std::int64_t segment_id)
        : DataError("unknown segment " + std::to_string(segment_id)), segment_id_(segment_id) {}
    std::int64_t segment_id() const noexcept { return segment_id_; }

private:
    std::int64_t segment_id_;
};

class UnknownCategory : public DataError {
public:
    explicit UnknownCategory(const std::string& category)
        : DataError("unknown category '" + category + "'") {}
};

class AllMissing : public DataError {
public:
    explicit AllMissing(const std::string& column)
        : DataError("column '" + column + "' has no non-missing values") {}
};

class DimensionError : public DataError {
public:
    using DataError::DataError;
};

class SchemaVersionError : public DataError {
public:
    using DataError::DataError;
};

class CorruptCheckpoint : public DataError {
public:
    using DataError::DataError;
};

class EmptyInput : public DataError {
public:
    EmptyInput() : DataError("empty input") {}
};

class ZeroVariance : public DataError {
public:
    ZeroVariance() : DataError("target has zero variance") {}
};

// --- programming / state errors ---------------------------------------------

class ShapeError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::Numerical; }
};

class IndexError : public Error {
public:
    using Error::Error;
};

class NotFitted : public Error {
public:
    explicit NotFitted(const std::string& what) : Error(what + " used before fit") {}
};

class ModelMissing : public Error {
public:
    ModelMissing() : Error("no model loaded") {}
};

class HorizonMismatch : public Error {
public:
    using Error::Error;
};

// --- numerical failure (exit 4) ---------------------------------------------

class NonFinite : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::Numerical; }
};

}  // namespace pavetwin
