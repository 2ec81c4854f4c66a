#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sqled/dataset.h"
#include "sqled/label.h"

struct sqlite3;

namespace sqled {

struct Scalar {
  enum class Kind { kNull, kInteger, kReal, kText };
  Kind kind = Kind::kNull;
  std::int64_t integer = 0;
  double real = 0.0;
  std::string text;

  // Integers without a decimal point, reals with 6 significant digits, text
  // verbatim. NULL has no rendering; it sorts before everything else.
  std::string canonical() const;
};

struct ExecResult {
  std::vector<std::string> column_names;
  std::vector<std::vector<Scalar>> columns;
  std::size_t row_count = 0;
};

enum class ExecErrorKind { kSyntax, kRuntime, kTimeout, kDecode };

struct ExecError {
  ExecErrorKind kind = ExecErrorKind::kRuntime;
  std::string message;
};

using ExecOutcome = std::variant<ExecResult, ExecError>;

struct ExecOptions {
  int timeout_ms = 5000;
  // Replace invalid UTF-8 with U+FFFD. When false, invalid text is an error.
  bool tolerant_utf8 = true;
};

// Read-only connection to one SQLite database file.
class Database {
 public:
  explicit Database(const std::filesystem::path& path);
  ~Database();
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;

  ExecOutcome execute(const std::string& sql, const ExecOptions& options = {}) const;

 private:
  sqlite3* db_ = nullptr;
};

ExecOutcome execute(const std::filesystem::path& db_path, const std::string& sql,
                    const ExecOptions& options = {});

// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);
bool is_valid_utf8(std::string_view bytes);

// Column and row counts must agree. Order-sensitive: columns equal element by
// element. Otherwise each column is sorted independently before comparison.
bool compare_results(const ExecResult& gold, const ExecResult& pred, bool order_sensitive);

// Multiset-of-rows comparison, used to audit the per-column sort.
bool rows_equal_unordered(const ExecResult& gold, const ExecResult& pred);

struct PipelineOptions {
  bool fix_utf8 = true;
  bool fix_empty_gold = true;
  bool fix_order = true;
  bool fix_limit = true;
  int timeout_ms = 5000;

  static PipelineOptions naive() { return {false, false, false, false, 5000}; }
  bool operator==(const PipelineOptions&) const = default;
};

// Labels pred_sql against gold_sql. Throws DataError when the gold query
// cannot be parsed or executed under the fixed pipeline.
Label label_prediction(const Database& db, const std::string& gold_sql,
                       const std::string& pred_sql, const PipelineOptions& options = {});
Label label_prediction(const std::filesystem::path& db_path, const std::string& gold_sql,
                       const std::string& pred_sql, const PipelineOptions& options = {});

std::filesystem::path database_path(const std::filesystem::path& db_root, const std::string& db_id);

// Persistent cache keyed by (db_id, gold hash, pred hash, pipeline version).
class LabelCache {
 public:
  LabelCache() = default;
  explicit LabelCache(std::filesystem::path path);

  std::optional<Label> find(const std::string& db_id, const std::string& gold,
                            const std::string& pred, const PipelineOptions& options) const;
  void insert(const std::string& db_id, const std::string& gold, const std::string& pred,
              const PipelineOptions& options, const Label& label);
  void save() const;
  std::size_t size() const { return entries_.size(); }

 private:
  static std::string key(const std::string& db_id, const std::string& gold,
                         const std::string& pred, const PipelineOptions& options);
  std::filesystem::path path_;
  std::map<std::string, Label> entries_;
  mutable std::mutex mu_;
};

// Labels every prediction in place. Work is split across `workers` threads by
// question; each worker opens its own connections.
void label_beams(std::vector<BeamRecord>& beams, const std::filesystem::path& db_root,
                 const PipelineOptions& options = {}, int workers = 1,
                 LabelCache* cache = nullptr);

struct ParserEvaluation {
  std::size_t examples = 0;
  double accuracy = 0.0;        // fixed pipeline
  double naive_accuracy = 0.0;  // no fixes
  std::size_t disagreement = 0;
  std::vector<std::string> disagreeing_ids;
};

// Top-1 execution accuracy under the fixed and naive pipelines.
ParserEvaluation evaluate_parser(const std::vector<BeamRecord>& beams,
                                 const std::filesystem::path& db_root);

// FNV-1a, stable across platforms.
std::uint64_t stable_hash(std::string_view s);

}  // namespace sqled
