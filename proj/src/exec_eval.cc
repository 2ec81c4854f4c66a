#include "sqled/exec_eval.h"

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "sqled/error.h"
#include "sqled/sql_rewrite.h"

namespace sqled {

std::string Scalar::canonical() const {
  switch (kind) {
    case Kind::kNull:
      return "";
    case Kind::kInteger:
      return std::to_string(integer);
    case Kind::kReal: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6g", real);
      return buf;
    }
    case Kind::kText:
      return text;
  }
  return "";
}

namespace {

// NULL first, then the canonical string order.
using SortKey = std::pair<int, std::string>;

SortKey sort_key(const Scalar& s) {
  return {s.kind == Scalar::Kind::kNull ? 0 : 1, s.canonical()};
}

std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  std::size_t len;
  std::uint32_t min;
  if (c < 0x80) return 1;
  if ((c & 0xE0) == 0xC0) {
    len = 2;
    min = 0x80;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3;
    min = 0x800;
  } else if ((c & 0xF8) == 0xF0) {
    len = 4;
    min = 0x10000;
  } else {
    return 0;
  }
  if (i + len > s.size()) return 0;
  std::uint32_t cp = c & (0x7F >> len);
  for (std::size_t k = 1; k < len; ++k) {
    const auto cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (cc & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  return len;
}

struct Deadline {
  std::chrono::steady_clock::time_point at;
  bool expired = false;
};

int progress_callback(void* arg) {
  auto* d = static_cast<Deadline*>(arg);
  if (std::chrono::steady_clock::now() >= d->at) {
    d->expired = true;
    return 1;
  }
  return 0;
}

bool is_syntax_message(const std::string& msg) {
  return msg.find("syntax error") != std::string::npos ||
         msg.find("incomplete input") != std::string::npos ||
         msg.find("unrecognized token") != std::string::npos;
}

}  // namespace

std::string sanitize_utf8(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const std::size_t len = utf8_sequence_length(bytes, i);
    if (len == 0) {
      out += "\xEF\xBF\xBD";
      ++i;
    } else {
      out.append(bytes.substr(i, len));
      i += len;
    }
  }
  return out;
}

bool is_valid_utf8(std::string_view bytes) {
  std::size_t i = 0;
  while (i < bytes.size()) {
    const std::size_t len = utf8_sequence_length(bytes, i);
    if (len == 0) return false;
    i += len;
  }
  return true;
}

Database::Database(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("database not found: " + path.string());
  if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX, nullptr) !=
      SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw DataError("cannot open " + path.string() + ": " + msg);
  }
}

Database::~Database() {
  if (db_) sqlite3_close(db_);
}

ExecOutcome Database::execute(const std::string& sql, const ExecOptions& options) const {
  Deadline deadline{std::chrono::steady_clock::now() + std::chrono::milliseconds(options.timeout_ms)};
  sqlite3_progress_handler(db_, 1000, &progress_callback, &deadline);

  sqlite3_stmt* stmt = nullptr;
  if (sqlite3_prepare_v2(db_, sql.c_str(), static_cast<int>(sql.size()), &stmt, nullptr) !=
      SQLITE_OK) {
    std::string msg = sqlite3_errmsg(db_);
    sqlite3_finalize(stmt);
    sqlite3_progress_handler(db_, 0, nullptr, nullptr);
    if (deadline.expired) return ExecError{ExecErrorKind::kTimeout, "timeout"};
    return ExecError{is_syntax_message(msg) ? ExecErrorKind::kSyntax : ExecErrorKind::kRuntime, msg};
  }
  if (!stmt) {
    sqlite3_progress_handler(db_, 0, nullptr, nullptr);
    return ExecError{ExecErrorKind::kSyntax, "empty statement"};
  }

  ExecResult result;
  const int ncol = sqlite3_column_count(stmt);
  result.columns.resize(static_cast<std::size_t>(ncol));
  for (int c = 0; c < ncol; ++c) {
    const char* name = sqlite3_column_name(stmt, c);
    result.column_names.push_back(name ? sanitize_utf8(name) : "");
  }

  std::optional<ExecError> error;
  int rc;
  while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
    for (int c = 0; c < ncol; ++c) {
      Scalar v;
      switch (sqlite3_column_type(stmt, c)) {
        case SQLITE_INTEGER:
          v.kind = Scalar::Kind::kInteger;
          v.integer = sqlite3_column_int64(stmt, c);
          break;
        case SQLITE_FLOAT:
          v.kind = Scalar::Kind::kReal;
          v.real = sqlite3_column_double(stmt, c);
          break;
        case SQLITE_NULL:
          v.kind = Scalar::Kind::kNull;
          break;
        default: {
          const auto* bytes = static_cast<const char*>(sqlite3_column_blob(stmt, c));
          const int n = sqlite3_column_bytes(stmt, c);
          std::string_view raw(bytes ? bytes : "", static_cast<std::size_t>(n));
          if (!options.tolerant_utf8 && !is_valid_utf8(raw)) {
            error = ExecError{ExecErrorKind::kDecode, "could not decode column to UTF-8"};
          }
          v.kind = Scalar::Kind::kText;
          v.text = sanitize_utf8(raw);
        }
      }
      result.columns[static_cast<std::size_t>(c)].push_back(std::move(v));
    }
    ++result.row_count;
    if (error) break;
  }
  if (!error && rc != SQLITE_DONE && rc != SQLITE_ROW) {
    if (deadline.expired || rc == SQLITE_INTERRUPT) {
      error = ExecError{ExecErrorKind::kTimeout, "timeout"};
    } else {
      error = ExecError{ExecErrorKind::kRuntime, sqlite3_errmsg(db_)};
    }
  }
  sqlite3_finalize(stmt);
  sqlite3_progress_handler(db_, 0, nullptr, nullptr);
  if (error) return *error;
  return result;
}

ExecOutcome execute(const std::filesystem::path& db_path, const std::string& sql,
                    const ExecOptions& options) {
  Database db(db_path);
  return db.execute(sql, options);
}

bool compare_results(const ExecResult& gold, const ExecResult& pred, bool order_sensitive) {
  if (gold.columns.size() != pred.columns.size() || gold.row_count != pred.row_count) return false;
  for (std::size_t c = 0; c < gold.columns.size(); ++c) {
    std::vector<SortKey> g, p;
    for (const auto& v : gold.columns[c]) g.push_back(sort_key(v));
    for (const auto& v : pred.columns[c]) p.push_back(sort_key(v));
    if (!order_sensitive) {
      std::sort(g.begin(), g.end());
      std::sort(p.begin(), p.end());
    }
    if (g != p) return false;
  }
  return true;
}

bool rows_equal_unordered(const ExecResult& gold, const ExecResult& pred) {
  if (gold.columns.size() != pred.columns.size() || gold.row_count != pred.row_count) return false;
  auto rows = [](const ExecResult& r) {
    std::vector<std::vector<SortKey>> out(r.row_count);
    for (const auto& col : r.columns) {
      for (std::size_t i = 0; i < r.row_count; ++i) out[i].push_back(sort_key(col[i]));
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  return rows(gold) == rows(pred);
}

Label label_prediction(const Database& db, const std::string& gold_sql,
                       const std::string& pred_sql, const PipelineOptions& options) {
  SqlAst gold_ast;
  try {
    gold_ast = parse_sql(gold_sql);
  } catch (const DataError& e) {
    throw DataError("gold query outside the supported grammar: " + std::string(e.what()));
  }
  Label label;
  std::optional<SqlAst> pred_ast;
  try {
    pred_ast = parse_sql(pred_sql);
  } catch (const DataError&) {
    // Outside the grammar: still executable as raw text, but neither the LIMIT
    // rewrite nor the set-match fallback applies.
  }

  SqlAst gold_run = gold_ast;
  std::string pred_text = pred_sql;
  if (options.fix_limit && pred_ast) {
    auto [g, p] = drop_equal_limits(gold_ast, *pred_ast);
    label.limits_dropped = has_top_level_limit(gold_ast) && !has_top_level_limit(g);
    gold_run = std::move(g);
    pred_text = render(p);
  }

  const ExecOptions exec{options.timeout_ms, options.fix_utf8};
  ExecOutcome gold_out = db.execute(render(gold_run), exec);
  if (auto* err = std::get_if<ExecError>(&gold_out)) {
    if (err->kind == ExecErrorKind::kDecode) {
      // The unfixed comparison treats a decoding exception as a mismatch.
      label.verdict = Verdict::kWrong;
      label.provenance = Provenance::kDecodeFailure;
      return label;
    }
    throw DataError("gold query failed to execute: " + err->message);
  }
  ExecOutcome pred_out = db.execute(pred_text, exec);
  if (auto* err = std::get_if<ExecError>(&pred_out)) {
    if (err->kind == ExecErrorKind::kDecode) {
      label.verdict = Verdict::kWrong;
      label.provenance = Provenance::kDecodeFailure;
    } else {
      label.verdict = Verdict::kUnexecutable;
      label.provenance = pred_ast ? Provenance::kExecution : Provenance::kParse;
    }
    return label;
  }
  const auto& gold_res = std::get<ExecResult>(gold_out);
  const auto& pred_res = std::get<ExecResult>(pred_out);

  if (options.fix_empty_gold && gold_res.row_count == 0) {
    label.provenance = Provenance::kSetMatchFallback;
    label.verdict = pred_ast && set_match(gold_ast, *pred_ast) ? Verdict::kCorrect : Verdict::kWrong;
    return label;
  }

  const bool order_sensitive = !options.fix_order || has_top_level_order_by(gold_ast);
  const bool equal = compare_results(gold_res, pred_res, order_sensitive);
  label.verdict = equal ? Verdict::kCorrect : Verdict::kWrong;
  label.provenance = order_sensitive ? Provenance::kExecution : Provenance::kOrderInsensitive;
  if (!order_sensitive) label.row_pairing_disagrees = equal != rows_equal_unordered(gold_res, pred_res);
  return label;
}

Label label_prediction(const std::filesystem::path& db_path, const std::string& gold_sql,
                       const std::string& pred_sql, const PipelineOptions& options) {
  Database db(db_path);
  return label_prediction(db, gold_sql, pred_sql, options);
}

std::filesystem::path database_path(const std::filesystem::path& db_root, const std::string& db_id) {
  return db_root / db_id / (db_id + ".sqlite");
}

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

constexpr int kPipelineVersion = 1;

std::string options_tag(const PipelineOptions& o) {
  std::string tag = "v" + std::to_string(kPipelineVersion) + ":";
  tag += o.fix_utf8 ? 'u' : '-';
  tag += o.fix_empty_gold ? 'e' : '-';
  tag += o.fix_order ? 'o' : '-';
  tag += o.fix_limit ? 'l' : '-';
  return tag;
}

}  // namespace

LabelCache::LabelCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string key, verdict, provenance;
    int limits = 0, audit = 0;
    if (!std::getline(f, key, '\t') || !(f >> verdict >> provenance >> limits >> audit)) continue;
    Label l;
    l.verdict = parse_verdict(verdict);
    l.provenance = parse_provenance(provenance);
    l.limits_dropped = limits != 0;
    l.row_pairing_disagrees = audit != 0;
    entries_[key] = l;
  }
}

std::string LabelCache::key(const std::string& db_id, const std::string& gold,
                            const std::string& pred, const PipelineOptions& options) {
  std::ostringstream k;
  k << db_id << '|' << std::hex << stable_hash(gold) << '|' << stable_hash(pred) << '|'
    << options_tag(options);
  return k.str();
}

std::optional<Label> LabelCache::find(const std::string& db_id, const std::string& gold,
                                      const std::string& pred,
                                      const PipelineOptions& options) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key(db_id, gold, pred, options));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void LabelCache::insert(const std::string& db_id, const std::string& gold, const std::string& pred,
                        const PipelineOptions& options, const Label& label) {
  std::lock_guard lock(mu_);
  entries_[key(db_id, gold, pred, options)] = label;
}

void LabelCache::save() const {
  if (path_.empty()) return;
  std::lock_guard lock(mu_);
  std::ofstream out(path_);
  if (!out) throw DataError("cannot write label cache " + path_.string());
  for (const auto& [k, l] : entries_) {
    out << k << '\t' << verdict_name(l.verdict) << ' ' << provenance_name(l.provenance) << ' '
        << (l.limits_dropped ? 1 : 0) << ' ' << (l.row_pairing_disagrees ? 1 : 0) << '\n';
  }
}

void label_beams(std::vector<BeamRecord>& beams, const std::filesystem::path& db_root,
                 const PipelineOptions& options, int workers, LabelCache* cache) {
  workers = std::max(1, workers);
  std::vector<std::string> errors(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    try {
      std::map<std::string, std::unique_ptr<Database>> open;
      for (std::size_t i = static_cast<std::size_t>(w); i < beams.size();
           i += static_cast<std::size_t>(workers)) {
        auto& beam = beams[i];
        for (auto& p : beam.predictions) {
          if (cache) {
            if (auto hit = cache->find(beam.db_id, beam.gold_sql, p.sql, options)) {
              p.label = *hit;
              continue;
            }
          }
          auto& db = open[beam.db_id];
          if (!db) db = std::make_unique<Database>(database_path(db_root, beam.db_id));
          p.label = label_prediction(*db, beam.gold_sql, p.sql, options);
          if (cache) cache->insert(beam.db_id, beam.gold_sql, p.sql, options, *p.label);
        }
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(w)] = e.what();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw DataError(e);
  }
}

ParserEvaluation evaluate_parser(const std::vector<BeamRecord>& beams,
                                 const std::filesystem::path& db_root) {
  ParserEvaluation ev;
  std::size_t fixed_correct = 0, naive_correct = 0;
  std::map<std::string, std::unique_ptr<Database>> open;
  for (const auto& beam : beams) {
    if (beam.predictions.empty()) continue;
    auto& db = open[beam.db_id];
    if (!db) db = std::make_unique<Database>(database_path(db_root, beam.db_id));
    const auto& top = beam.predictions.front().sql;
    const Label fixed = label_prediction(*db, beam.gold_sql, top, PipelineOptions{});
    const Label naive = label_prediction(*db, beam.gold_sql, top, PipelineOptions::naive());
    ++ev.examples;
    if (fixed.correct()) ++fixed_correct;
    if (naive.correct()) ++naive_correct;
    if (fixed.verdict != naive.verdict) {
      ++ev.disagreement;
      ev.disagreeing_ids.push_back(beam.question_id);
    }
  }
  if (ev.examples > 0) {
    ev.accuracy = static_cast<double>(fixed_correct) / static_cast<double>(ev.examples);
    ev.naive_accuracy = static_cast<double>(naive_correct) / static_cast<double>(ev.examples);
  }
  return ev;
}

}  // namespace sqled
