#pragma once

// Hand-built databases and query pairs whose labels were worked out by hand
// for the fixed and naive labeling pipelines.

#include <sqlite3.h>

#include <algorithm>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqled/dataset.h"
#include "sqled/label.h"

namespace sqled::testing {

inline void create_database(const std::filesystem::path& path, const std::string& script) {
  std::filesystem::create_directories(path.parent_path());
  std::filesystem::remove(path);
  sqlite3* db = nullptr;
  if (sqlite3_open(path.c_str(), &db) != SQLITE_OK) throw std::runtime_error("open failed");
  char* err = nullptr;
  if (sqlite3_exec(db, script.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "exec failed";
    sqlite3_free(err);
    sqlite3_close(db);
    throw std::runtime_error(msg);
  }
  sqlite3_close(db);
}

// db_root/concert/concert.sqlite and db_root/legacy/legacy.sqlite. The legacy
// database stores Latin-1 bytes in a TEXT column.
inline void create_crafted_databases(const std::filesystem::path& db_root) {
  create_database(db_root / "concert" / "concert.sqlite",
                  "CREATE TABLE singer (singer_id INTEGER PRIMARY KEY, name TEXT, country TEXT, "
                  "age INTEGER);"
                  "INSERT INTO singer VALUES (1, 'Joe', 'France', 52);"
                  "INSERT INTO singer VALUES (2, 'Tribal', 'Netherlands', 25);"
                  "INSERT INTO singer VALUES (3, 'Rose', 'France', 41);"
                  "INSERT INTO singer VALUES (4, 'Ana', 'Brazil', 52);"
                  "INSERT INTO singer VALUES (5, 'Timbaland', 'USA', 32);");
  create_database(db_root / "legacy" / "legacy.sqlite",
                  "CREATE TABLE album (id INTEGER PRIMARY KEY, title TEXT, year INTEGER);"
                  "INSERT INTO album VALUES (1, CAST(X'436166E920426C7565' AS TEXT), 1999);"
                  "INSERT INTO album VALUES (2, 'Plain', 2001);"
                  "INSERT INTO album VALUES (3, CAST(X'4E61EF7665' AS TEXT), 1999);");
}

enum class Fix { kNone, kUtf8, kEmptyGold, kOrder, kLimit };

struct CraftedCase {
  std::string name;
  Fix fix;
  std::string db_id;
  std::string gold;
  std::string pred;
  Verdict fixed;
  Verdict naive;
};

// Eight designed disagreements (two per fix) and four controls.
inline std::vector<CraftedCase> crafted_cases() {
  const auto C = Verdict::kCorrect, W = Verdict::kWrong, U = Verdict::kUnexecutable;
  return {
      {"utf8_filter", Fix::kUtf8, "legacy", "SELECT title FROM album WHERE year = 1999",
       "SELECT title FROM album WHERE id IN (1, 3)", C, W},
      {"utf8_ordered", Fix::kUtf8, "legacy", "SELECT title, year FROM album ORDER BY year",
       "SELECT title , year FROM album ORDER BY year , id", C, W},
      {"empty_gold_other_filter", Fix::kEmptyGold, "concert",
       "SELECT name FROM singer WHERE age > 100", "SELECT name FROM singer WHERE age > 200", W, C},
      {"empty_gold_other_column", Fix::kEmptyGold, "concert",
       "SELECT name FROM singer WHERE country = 'Peru'",
       "SELECT country FROM singer WHERE country = 'Peru'", W, C},
      {"order_filter", Fix::kOrder, "concert", "SELECT name FROM singer WHERE country = 'France'",
       "SELECT name FROM singer WHERE country = 'France' ORDER BY age", C, W},
      {"order_two_columns", Fix::kOrder, "concert", "SELECT name, age FROM singer",
       "SELECT name , age FROM singer ORDER BY age", C, W},
      {"limit_tie", Fix::kLimit, "concert", "SELECT name FROM singer WHERE age = 52 LIMIT 1",
       "SELECT name FROM singer WHERE age = 52 ORDER BY name LIMIT 1", C, W},
      {"limit_same_top_row", Fix::kLimit, "concert",
       "SELECT name FROM singer ORDER BY age ASC LIMIT 1",
       "SELECT name FROM singer WHERE age < 30 ORDER BY age LIMIT 1", W, C},
      {"control_identical", Fix::kNone, "concert",
       "SELECT name FROM singer ORDER BY age DESC LIMIT 3",
       "select name from singer order by age desc limit 3", C, C},
      {"control_wrong_projection", Fix::kNone, "concert",
       "SELECT COUNT(*) FROM singer WHERE age > 40", "SELECT name FROM singer WHERE age > 40", W,
       W},
      {"control_unexecutable", Fix::kNone, "concert", "SELECT name FROM singer",
       "SELECT nonexistent FROM singer", U, U},
      {"control_empty_gold_set_match", Fix::kNone, "concert",
       "SELECT name FROM singer WHERE age > 100 AND country = 'France'",
       "SELECT name FROM singer WHERE country = 'France' AND age > 100", C, C},
  };
}

// Ten beams, one designed disagreement per fix, for parser evaluation.
inline std::vector<BeamRecord> crafted_parser_beams() {
  const std::vector<std::string> picks = {"utf8_filter",
                                          "empty_gold_other_filter",
                                          "order_filter",
                                          "limit_tie",
                                          "control_identical",
                                          "control_wrong_projection",
                                          "control_empty_gold_set_match"};
  std::vector<BeamRecord> beams;
  for (const auto& c : crafted_cases()) {
    if (std::find(picks.begin(), picks.end(), c.name) == picks.end()) continue;
    BeamRecord b;
    b.question_id = c.name;
    b.db_id = c.db_id;
    b.question = c.name;
    b.gold_sql = c.gold;
    b.predictions.push_back(Prediction{c.pred, -0.1, std::nullopt, std::nullopt});
    beams.push_back(b);
  }
  const std::vector<std::pair<std::string, std::string>> extra = {
      {"SELECT COUNT(*) FROM singer", "SELECT COUNT(*) FROM singer"},
      {"SELECT MAX(age) FROM singer", "SELECT MIN(age) FROM singer"},
      {"SELECT country FROM singer GROUP BY country HAVING COUNT(*) > 1",
       "SELECT country FROM singer GROUP BY country HAVING count(*) > 1"},
  };
  for (std::size_t i = 0; i < extra.size(); ++i) {
    BeamRecord b;
    b.question_id = "extra" + std::to_string(i);
    b.db_id = "concert";
    b.question = b.question_id;
    b.gold_sql = extra[i].first;
    b.predictions.push_back(Prediction{extra[i].second, -0.1, std::nullopt, std::nullopt});
    beams.push_back(b);
  }
  return beams;
}

}  // namespace sqled::testing
