#pragma once

#include <stdexcept>
#include <string>

namespace aam {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Mismatched vector/matrix/landmark dimensions between operands.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Too few samples, zero spread, or otherwise degenerate input data.
class DegenerateInputError : public Error {
  public:
    using Error::Error;
};

/// Collinear vertices, degenerate triangles, empty bounding boxes.
class GeometryError : public Error {
  public:
    using Error::Error;
};

/// Text-format parse failure; carries the 1-based line it was detected on.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, int line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

/// Binary model container failures, split by cause so callers can react.
class SerializationError : public Error {
  public:
    enum class Kind { BadMagic, VersionMismatch, Truncated, ChecksumMismatch, Malformed };

    SerializationError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

/// File-system level failures (missing file, unreadable image, bad manifest entry).
class IoError : public Error {
  public:
    using Error::Error;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

} // namespace aam
