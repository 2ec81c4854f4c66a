#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sqled {

// Exit-code families used by the command line front end.
enum class ErrorFamily { kConfig = 1, kData = 2, kNumeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorFamily family, const std::string& what)
      : std::runtime_error(what), family_(family) {}
  ErrorFamily family() const { return family_; }

 private:
  ErrorFamily family_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorFamily::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorFamily::kData, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorFamily::kNumeric, what) {}
};

// Graph errors.
class GraphError : public DataError {
 public:
  using DataError::DataError;
};
class EmptyGraph : public GraphError {
 public:
  EmptyGraph() : GraphError("graph has no nodes or no leaves") {}
  using GraphError::GraphError;
};
class CycleError : public GraphError {
 public:
  CycleError() : GraphError("child edges contain a cycle") {}
};

// SQL front end errors carry the byte offset (lexer) or token index (parser).
class LexError : public DataError {
 public:
  LexError(std::size_t position, const std::string& what)
      : DataError("lex error at byte " + std::to_string(position) + ": " + what),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class SyntaxError : public DataError {
 public:
  SyntaxError(std::size_t position, const std::string& expected, const std::string& found)
      : DataError("syntax error at token " + std::to_string(position) + ": expected " +
                  expected + ", found " + found),
        position_(position),
        expected_(expected) {}
  std::size_t position() const { return position_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

// Record-level ingestion errors.
class FormatError : public DataError {
 public:
  FormatError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MismatchError : public DataError {
 public:
  MismatchError(const std::string& id, const std::string& what)
      : DataError(id + ": " + what), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

// Dataset and evaluation errors.
class DuplicateQuestion : public DataError {
 public:
  explicit DuplicateQuestion(const std::string& id) : DataError("duplicate question " + id) {}
};
class TooFewDatabases : public DataError {
 public:
  TooFewDatabases(std::size_t have, std::size_t need)
      : DataError("too few databases: have " + std::to_string(have) + ", need " +
                  std::to_string(need)) {}
};
class MissingLabels : public DataError {
 public:
  explicit MissingLabels(const std::string& id) : DataError("missing labels in beam " + id) {}
};
class EmptyInput : public DataError {
 public:
  explicit EmptyInput(const std::string& what) : DataError("empty input: " + what) {}
};
class DegenerateClasses : public DataError {
 public:
  DegenerateClasses() : DataError("need at least one positive and one negative example") {}
};
class ArityMismatch : public DataError {
 public:
  ArityMismatch(std::size_t expected, std::size_t got)
      : DataError("expected " + std::to_string(expected) + " values, got " + std::to_string(got)) {}
};

class EmptyBeam : public EmptyInput {
 public:
  EmptyBeam() : EmptyInput("beam has no predictions") {}
};

// Model errors.
class EmptyDataset : public DataError {
 public:
  explicit EmptyDataset(const std::string& what) : DataError("empty dataset: " + what) {}
};
class LengthMismatch : public DataError {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : DataError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};
class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace sqled
