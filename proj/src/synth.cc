#include "sqled/synth.h"

#include <sqlite3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <tuple>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "sqled/error.h"
#include "sqled/exec_eval.h"

namespace sqled {

void build_database(const std::filesystem::path& sqlite_path, const std::string& script) {
  std::filesystem::create_directories(sqlite_path.parent_path());
  std::filesystem::remove(sqlite_path);
  sqlite3* db = nullptr;
  if (sqlite3_open(sqlite_path.c_str(), &db) != SQLITE_OK) {
    sqlite3_close(db);
    throw DataError("cannot create " + sqlite_path.string());
  }
  char* err = nullptr;
  const int rc = sqlite3_exec(db, script.c_str(), nullptr, nullptr, &err);
  std::string msg = err ? err : "";
  sqlite3_free(err);
  sqlite3_close(db);
  if (rc != SQLITE_OK) throw DataError("script failed for " + sqlite_path.string() + ": " + msg);
}

int init_databases(const std::filesystem::path& db_root) {
  if (!std::filesystem::is_directory(db_root)) throw ConfigError("no database root at " + db_root.string());
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(db_root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  int built = 0;
  for (const auto& dir : dirs) {
    const std::string id = dir.filename().string();
    const auto script_path = dir / (id + ".sql");
    if (!std::filesystem::exists(script_path)) continue;
    std::ifstream in(script_path);
    std::stringstream buf;
    buf << in.rdbuf();
    build_database(dir / (id + ".sqlite"), buf.str());
    ++built;
  }
  return built;
}

namespace {

const std::vector<std::string> kTables = {"singer", "stadium", "employee", "product", "city",   "ship",   "team",
                                          "movie",  "student", "car",      "hotel",   "airport", "book", "game",
                                          "museum", "park",    "school",   "shop",    "concert", "course"};
const std::vector<std::string> kColumns = {"age",    "price",    "year",  "rating",     "salary",
                                           "height", "weight",   "capacity", "budget",  "score",
                                           "population", "duration", "distance", "speed", "area"};
const std::vector<std::string> kNames = {"alpha", "bravo", "delta", "echo",  "fox",   "golf",  "hotel",
                                         "india", "kilo",  "lima",  "mike",  "oscar", "papa",  "romeo",
                                         "sierra", "tango", "victor", "zulu"};

struct Comparison {
  std::string op;
  std::string first, second;  // two-word phrase
};
const std::vector<Comparison> kComparisons = {
    {">", "greater", "than"}, {"<", "less", "than"}, {">=", "at", "least"}, {"<=", "at", "most"}, {"=", "equal", "to"}};

struct Aggregate {
  std::string fn;
  std::string word;
};
const std::vector<Aggregate> kAggregates = {{"MAX", "maximum"}, {"MIN", "minimum"}, {"AVG", "average"}, {"SUM", "total"}};

struct Table {
  std::string db_id;
  std::string name;
  std::vector<std::string> columns;            // numeric
  std::vector<std::vector<int>> values;        // per column
};

// Query slots that corruptions can change.
struct Query {
  int kind = 0;      // 0 count, 1 aggregate, 2 filtered aggregate, 3 filtered list
  int agg = 0;       // index into kAggregates, kinds 1 and 2
  int agg_col = 0;   // kinds 1 and 2
  int filter_col = 0;
  int cmp = 0;
  int value = 0;
  bool count_star = false;

  std::string sql(const Table& t) const {
    std::string select;
    if (kind == 0 && count_star) {
      select = "COUNT(*)";
    } else if (kind == 0 || kind == 1 || kind == 2) {
      select = kAggregates[static_cast<std::size_t>(agg)].fn + "(" + t.columns[static_cast<std::size_t>(agg_col)] + ")";
    } else {
      select = "name";
    }
    std::string q = "SELECT " + select + " FROM " + t.name;
    if (kind != 1) {
      q += " WHERE " + t.columns[static_cast<std::size_t>(filter_col)] + " " +
           kComparisons[static_cast<std::size_t>(cmp)].op + " " + std::to_string(value);
    }
    return q;
  }
  friend bool operator<(const Query& a, const Query& b) {
    return std::tie(a.kind, a.agg, a.agg_col, a.filter_col, a.cmp, a.value, a.count_star) <
           std::tie(b.kind, b.agg, b.agg_col, b.filter_col, b.cmp, b.value, b.count_star);
  }
};

std::string leaf(const std::string& tag, const std::string& word) { return "(" + tag + " " + word + ")"; }

std::string phrase(const std::string& label, const std::vector<std::string>& parts) {
  std::string s = "(" + label;
  for (const auto& p : parts) s += " " + p;
  return s + ")";
}

std::string comparison_phrase(const Comparison& c, int value) {
  return phrase("ADJP", {leaf(c.first == "at" ? "IN" : "JJR", c.first),
                         phrase("PP", {leaf(c.first == "at" ? "JJS" : "IN", c.second),
                                       phrase("NP", {leaf("CD", std::to_string(value))})})});
}

std::string question_tree(const Query& q, const Table& t) {
  const std::string table = phrase("NP", {leaf("NN", t.name)});
  const std::string filter_col = phrase("NP", {leaf("NN", t.columns[static_cast<std::size_t>(q.filter_col)])});
  const auto& c = kComparisons[static_cast<std::size_t>(q.cmp)];
  switch (q.kind) {
    case 0:
      return phrase("ROOT", {phrase("SBARQ", {phrase("WHNP", {leaf("WRB", "how"), leaf("JJ", "many")}),
                                              phrase("SQ", {phrase("PP", {leaf("IN", "in"), table}), leaf("VBP", "have"),
                                                            filter_col, comparison_phrase(c, q.value)}),
                                              leaf(".", "?")})});
    case 1:
    case 2: {
      const auto& a = kAggregates[static_cast<std::size_t>(q.agg)];
      std::vector<std::string> np = {phrase("NP", {leaf("DT", "the"), leaf("JJ", a.word),
                                                   leaf("NN", t.columns[static_cast<std::size_t>(q.agg_col)])}),
                                     phrase("PP", {leaf("IN", "of"), table})};
      if (q.kind == 2) np.push_back(phrase("PP", {leaf("IN", "with"), filter_col, comparison_phrase(c, q.value)}));
      return phrase("ROOT", {phrase("SBARQ", {phrase("WHNP", {leaf("WP", "what")}),
                                              phrase("SQ", {leaf("VBZ", "is"), phrase("NP", np)}), leaf(".", "?")})});
    }
    default:
      return phrase("ROOT", {phrase("S", {phrase("VP", {leaf("VB", "list"),
                                                        phrase("NP", {leaf("DT", "the"), leaf("NN", "name")}),
                                                        phrase("PP", {leaf("IN", "of"), table}),
                                                        phrase("SBAR", {phrase("WHNP", {leaf("WDT", "whose")}),
                                                                        phrase("S", {filter_col, leaf("VBZ", "is"),
                                                                                     comparison_phrase(c, q.value)})})}),
                                          leaf(".", ".")})});
  }
}

// Head rules: noun phrases are headed by their last child, everything else
// by its first. Returns the 1-based head token of the subtree.
int assign_heads(const BracketTree& t, int& next_token, std::vector<int>& heads) {
  if (t.leaf) return ++next_token;
  std::vector<int> child_heads;
  for (const auto& c : t.children) child_heads.push_back(assign_heads(c, next_token, heads));
  const bool last = t.label == "NP" || t.label == "WHNP";
  const std::size_t h = last ? child_heads.size() - 1 : 0;
  for (std::size_t i = 0; i < child_heads.size(); ++i) {
    if (i != h) heads[static_cast<std::size_t>(child_heads[i] - 1)] = child_heads[h];
  }
  return child_heads[h];
}

QuestionAnnotation annotate(const std::string& id, const std::string& tree) {
  QuestionAnnotation a;
  a.question_id = id;
  a.constituency = tree;
  const BracketTree t = parse_bracketed(tree);
  a.tokens = bracket_leaves(t);
  a.dep_heads.assign(a.tokens.size(), 0);
  int next = 0;
  const int root = assign_heads(t, next, a.dep_heads);
  a.dep_heads[static_cast<std::size_t>(root - 1)] = 0;
  for (std::size_t i = 0; i < a.tokens.size(); ++i) a.dep_rels.push_back(a.dep_heads[i] == 0 ? "root" : "dep");
  validate_annotation(a);
  return a;
}

std::string question_text(const QuestionAnnotation& a) {
  std::string s;
  for (const auto& t : a.tokens) s += (s.empty() ? "" : " ") + t;
  return s;
}

std::string join_row(const Table& t, int r, const std::string& name) {
  std::string s = "INSERT INTO " + t.name + " VALUES (" + std::to_string(r + 1) + ", '" + name + "'";
  for (const auto& col : t.values) s += ", " + std::to_string(col[static_cast<std::size_t>(r)]);
  return s + ");\n";
}

// One slot change of the gold query.
Query corrupt(const Query& gold, const Table& t, std::mt19937_64& rng) {
  Query q = gold;
  const int cols = static_cast<int>(t.columns.size());
  auto other = [&](int current, int n) {
    const int shift = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
    return (current + shift) % n;
  };
  for (;;) {
    switch (rng() % 3) {
      case 0:  // aggregate
        if (gold.kind == 3) continue;
        if (gold.kind == 0) {
          q.count_star = false;
          q.agg = static_cast<int>(rng() % kAggregates.size());
          q.agg_col = gold.filter_col;
        } else {
          q.agg = other(gold.agg, static_cast<int>(kAggregates.size()));
        }
        return q;
      case 1:  // operator
        if (gold.kind == 1) continue;
        q.cmp = other(gold.cmp, static_cast<int>(kComparisons.size()));
        return q;
      default:  // column
        if (gold.kind == 1 || gold.kind == 2) {
          if (gold.kind == 2 && rng() % 2 == 0) {
            q.filter_col = other(gold.filter_col, cols);
          } else {
            q.agg_col = other(gold.agg_col, cols);
          }
        } else {
          q.filter_col = other(gold.filter_col, cols);
        }
        return q;
    }
  }
}

}  // namespace

SynthCorpus generate_synthetic_corpus(const std::filesystem::path& db_root, const SynthConfig& config) {
  if (config.databases < 1 || config.databases > static_cast<int>(kTables.size())) {
    throw ConfigError("synthetic corpus supports 1 to " + std::to_string(kTables.size()) + " databases");
  }
  if (config.beam_size < 1 || config.pairs < config.beam_size) throw ConfigError("invalid pair or beam counts");
  std::mt19937_64 rng(config.seed);
  SynthCorpus corpus;

  std::vector<Table> tables;
  for (int d = 0; d < config.databases; ++d) {
    Table t;
    t.name = kTables[static_cast<std::size_t>(d)];
    t.db_id = t.name + "_" + std::to_string(d + 1);
    std::vector<std::string> pool = kColumns;
    seeded_shuffle(pool, rng);
    t.columns.assign(pool.begin(), pool.begin() + 4);
    std::string script = "CREATE TABLE " + t.name + " (id INTEGER PRIMARY KEY, name TEXT";
    for (const auto& c : t.columns) script += ", " + c + " INTEGER";
    script += ");\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      std::vector<int> values;
      for (int v = 1; v < 100; ++v) values.push_back(v);
      seeded_shuffle(values, rng);
      values.resize(static_cast<std::size_t>(config.rows_per_table));
      t.values.push_back(values);
    }
    std::vector<std::string> names = kNames;
    seeded_shuffle(names, rng);
    for (int r = 0; r < config.rows_per_table; ++r) {
      script += join_row(t, r, names[static_cast<std::size_t>(r) % names.size()] + std::to_string(r));
    }
    const auto dir = db_root / t.db_id;
    std::filesystem::create_directories(dir);
    std::ofstream(dir / (t.db_id + ".sql")) << script;
    build_database(dir / (t.db_id + ".sqlite"), script);
    corpus.db_ids.push_back(t.db_id);
    tables.push_back(t);
  }

  const int beams = config.pairs / config.beam_size;
  std::vector<std::unique_ptr<Database>> connections;
  for (const auto& t : tables) connections.push_back(std::make_unique<Database>(database_path(db_root, t.db_id)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  for (int b = 0; b < beams; ++b) {
    const std::size_t d = static_cast<std::size_t>(b % config.databases);
    const Table& t = tables[d];
    Query gold;
    gold.kind = static_cast<int>(rng() % 4);
    gold.count_star = gold.kind == 0;
    gold.agg = static_cast<int>(rng() % kAggregates.size());
    gold.agg_col = static_cast<int>(rng() % t.columns.size());
    gold.filter_col = static_cast<int>(rng() % t.columns.size());
    gold.cmp = static_cast<int>(rng() % kComparisons.size());
    const auto& col_values = t.values[static_cast<std::size_t>(gold.filter_col)];
    gold.value = col_values[rng() % col_values.size()];

    BeamRecord beam;
    beam.question_id = config.question_prefix + std::to_string(b);
    beam.db_id = t.db_id;
    beam.gold_sql = gold.sql(t);
    const QuestionAnnotation a = annotate(beam.question_id, question_tree(gold, t));
    beam.question = question_text(a);
    corpus.annotations[a.question_id] = a;

    // Wrong members, each changing the result.
    std::set<Query> used = {gold};
    std::vector<Query> wrong;
    for (int attempt = 0; attempt < 200 && static_cast<int>(wrong.size()) < config.beam_size; ++attempt) {
      const Query q = corrupt(gold, t, rng);
      if (used.count(q)) continue;
      used.insert(q);
      if (label_prediction(*connections[d], beam.gold_sql, q.sql(t)).correct()) continue;
      wrong.push_back(q);
    }
    std::vector<std::string> members;
    const double u = unit(rng);
    const int gold_rank = u < config.top1_correct_rate ? 0
                          : u < config.top1_correct_rate + (1 - config.top1_correct_rate) / 2
                              ? 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::max(1, config.beam_size - 1)))
                              : -1;
    for (const auto& q : wrong) members.push_back(q.sql(t));
    if (gold_rank >= 0 || members.empty()) {
      const std::size_t at = std::min(members.size(), static_cast<std::size_t>(std::max(0, gold_rank)));
      members.insert(members.begin() + static_cast<std::ptrdiff_t>(at), beam.gold_sql);
    }
    members.resize(std::min(members.size(), static_cast<std::size_t>(config.beam_size)));

    double parser_score = -0.2 * unit(rng);
    for (const auto& sql : members) {
      Prediction p;
      p.sql = sql;
      p.parser_score = parser_score;
      const bool right = sql == beam.gold_sql;
      std::vector<double> passes;
      for (std::size_t k = 0; k < kDropoutPasses; ++k) {
        passes.push_back(std::exp(parser_score) + (right ? 0.05 : 0.12) * noise(rng));
      }
      p.dropout_scores = passes;
      beam.predictions.push_back(p);
      parser_score -= 0.1 + 0.6 * unit(rng);
    }
    corpus.beams.push_back(beam);
  }
  return corpus;
}

}  // namespace sqled
