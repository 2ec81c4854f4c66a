#include <gtest/gtest.h>

#include <random>

#include "sqled/error.h"
#include "sqled/exec_eval.h"
#include "support/crafted_suite.h"
#include "support/reference_queries.h"

namespace sqled {
namespace {

class ExecEvalTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new std::filesystem::path(std::filesystem::temp_directory_path() / "sqled_exec_eval_test");
    testing::create_crafted_databases(*root_);
    testing::create_database(*root_ / "heads" / "heads.sqlite",
                             "CREATE TABLE head (head_id INTEGER, name TEXT, age REAL);"
                             "INSERT INTO head VALUES (1, 'Tiger Woods', 67.0);"
                             "INSERT INTO head VALUES (2, 'Sergio Garcia', 68.0);"
                             "INSERT INTO head VALUES (3, 'K. J. Choi', 69.0);"
                             "INSERT INTO head VALUES (4, 'Dudley Hart', 52.0);"
                             "CREATE TABLE festival_detail (festival_id INTEGER, festival_name "
                             "TEXT, year INTEGER);"
                             "INSERT INTO festival_detail VALUES (1, 'Panasonic Awards', 2006);"
                             "INSERT INTO festival_detail VALUES (2, 'Flower Awards', 2007);"
                             "INSERT INTO festival_detail VALUES (3, 'Cherry Awards', 2008);"
                             "INSERT INTO festival_detail VALUES (4, 'Gold Awards', 2009);"
                             "INSERT INTO festival_detail VALUES (5, 'LA Awards', 2010);");
  }
  static void TearDownTestSuite() {
    std::filesystem::remove_all(*root_);
    delete root_;
  }
  static std::filesystem::path db(const std::string& id) { return database_path(*root_, id); }
  static std::filesystem::path* root_;
};
std::filesystem::path* ExecEvalTest::root_ = nullptr;

ExecResult ok(const ExecOutcome& o) {
  if (auto* e = std::get_if<ExecError>(&o)) ADD_FAILURE() << e->message;
  return std::get<ExecResult>(o);
}

ExecResult column_result(std::vector<std::vector<std::int64_t>> cols) {
  ExecResult r;
  for (auto& c : cols) {
    std::vector<Scalar> col;
    for (auto v : c) {
      Scalar s;
      s.kind = Scalar::Kind::kInteger;
      s.integer = v;
      col.push_back(s);
    }
    r.row_count = col.size();
    r.columns.push_back(col);
  }
  return r;
}

TEST(Utf8, Sanitize) {
  EXPECT_TRUE(is_valid_utf8("caf\xC3\xA9"));
  EXPECT_FALSE(is_valid_utf8("caf\xE9"));
  EXPECT_EQ(sanitize_utf8("caf\xE9!"), "caf\xEF\xBF\xBD!");
  EXPECT_FALSE(is_valid_utf8("\xC0\xAF"));       // overlong
  EXPECT_FALSE(is_valid_utf8("\xED\xA0\x80"));   // surrogate
  EXPECT_EQ(sanitize_utf8("ok \xF0\x9F\x98\x80"), "ok \xF0\x9F\x98\x80");
}

TEST(Scalar, CanonicalRendering) {
  Scalar i{Scalar::Kind::kInteger, 42, 0, ""};
  Scalar r{Scalar::Kind::kReal, 0, 1.0 / 3.0, ""};
  Scalar whole{Scalar::Kind::kReal, 0, 67.0, ""};
  EXPECT_EQ(i.canonical(), "42");
  EXPECT_EQ(r.canonical(), "0.333333");
  EXPECT_EQ(whole.canonical(), "67");
}

TEST(Compare, OrderSensitivity) {
  const ExecResult a = column_result({{1, 2}});
  const ExecResult b = column_result({{2, 1}});
  EXPECT_TRUE(compare_results(a, a, true));
  EXPECT_FALSE(compare_results(a, b, true));
  EXPECT_TRUE(compare_results(a, b, false));
  EXPECT_TRUE(compare_results(b, a, false));
  EXPECT_FALSE(compare_results(a, column_result({{1, 2, 3}}), false));
  EXPECT_FALSE(compare_results(a, column_result({{1, 2}, {1, 2}}), false));
}

TEST(Compare, PerColumnSortBreaksRowPairing) {
  const ExecResult gold = column_result({{1, 2}, {10, 20}});
  const ExecResult pred = column_result({{1, 2}, {20, 10}});
  EXPECT_TRUE(compare_results(gold, pred, false));
  EXPECT_FALSE(rows_equal_unordered(gold, pred));
}

TEST(Compare, SymmetricOnRandomResults) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    auto rand_result = [&]() {
      std::vector<std::vector<std::int64_t>> cols(1 + rng() % 2);
      const std::size_t rows = rng() % 4;
      for (auto& c : cols)
        for (std::size_t i = 0; i < rows; ++i) c.push_back(static_cast<std::int64_t>(rng() % 3));
      return column_result(cols);
    };
    const ExecResult a = rand_result(), b = rand_result();
    EXPECT_EQ(compare_results(a, b, false), compare_results(b, a, false));
    EXPECT_EQ(compare_results(a, b, true), compare_results(b, a, true));
  }
}

TEST_F(ExecEvalTest, ExecuteBasics) {
  const ExecResult one = ok(execute(db("concert"), "SELECT 1"));
  ASSERT_EQ(one.columns.size(), 1u);
  EXPECT_EQ(one.columns[0][0].integer, 1);
  const auto err = execute(db("concert"), "SELECT nonexistent FROM singer");
  ASSERT_TRUE(std::holds_alternative<ExecError>(err));
  EXPECT_EQ(std::get<ExecError>(err).kind, ExecErrorKind::kRuntime);
  const auto syn = execute(db("concert"), "SELEC name FROM singer");
  EXPECT_EQ(std::get<ExecError>(syn).kind, ExecErrorKind::kSyntax);
  EXPECT_THROW(execute(db("missing"), "SELECT 1"), DataError);
}

TEST_F(ExecEvalTest, ReadOnly) {
  const auto out = execute(db("concert"), "DELETE FROM singer");
  ASSERT_TRUE(std::holds_alternative<ExecError>(out));
  EXPECT_EQ(ok(execute(db("concert"), "SELECT COUNT(*) FROM singer")).columns[0][0].integer, 5);
}

TEST_F(ExecEvalTest, InvalidUtf8IsReplacedNotRaised) {
  const ExecResult r = ok(execute(db("legacy"), "SELECT title FROM album ORDER BY id"));
  EXPECT_EQ(r.columns[0][0].text, "Caf\xEF\xBF\xBD Blue");
  const auto strict = execute(db("legacy"), "SELECT title FROM album", {5000, false});
  ASSERT_TRUE(std::holds_alternative<ExecError>(strict));
  EXPECT_EQ(std::get<ExecError>(strict).kind, ExecErrorKind::kDecode);
}

TEST_F(ExecEvalTest, Timeout) {
  const std::string slow =
      "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT COUNT(*) FROM c";
  const auto out = execute(db("concert"), slow, {50, true});
  ASSERT_TRUE(std::holds_alternative<ExecError>(out));
  EXPECT_EQ(std::get<ExecError>(out).kind, ExecErrorKind::kTimeout);
}

TEST_F(ExecEvalTest, CraftedSuiteFixedAndNaive) {
  for (const auto& c : testing::crafted_cases()) {
    const Label fixed = label_prediction(db(c.db_id), c.gold, c.pred);
    const Label naive = label_prediction(db(c.db_id), c.gold, c.pred, PipelineOptions::naive());
    EXPECT_EQ(fixed.verdict, c.fixed) << c.name;
    EXPECT_EQ(naive.verdict, c.naive) << c.name;
  }
}

TEST_F(ExecEvalTest, EachFixAloneExplainsItsCases) {
  for (const auto& c : testing::crafted_cases()) {
    if (c.fix == testing::Fix::kNone) continue;
    PipelineOptions only = PipelineOptions::naive();
    only.fix_utf8 = c.fix == testing::Fix::kUtf8;
    only.fix_empty_gold = c.fix == testing::Fix::kEmptyGold;
    only.fix_order = c.fix == testing::Fix::kOrder;
    only.fix_limit = c.fix == testing::Fix::kLimit;
    if (c.fix == testing::Fix::kLimit) only.fix_order = true;
    EXPECT_EQ(label_prediction(db(c.db_id), c.gold, c.pred, only).verdict, c.fixed) << c.name;
  }
}

TEST_F(ExecEvalTest, Provenance) {
  EXPECT_EQ(label_prediction(db("concert"), "SELECT name FROM singer WHERE age > 100",
                             "SELECT name FROM singer WHERE age > 100")
                .provenance,
            Provenance::kSetMatchFallback);
  const Label limit = label_prediction(db("concert"), "SELECT name FROM singer LIMIT 2",
                                       "SELECT name FROM singer LIMIT 2");
  EXPECT_TRUE(limit.limits_dropped);
  EXPECT_EQ(limit.provenance, Provenance::kOrderInsensitive);
  const Label unparsed = label_prediction(db("concert"), "SELECT name FROM singer", "SELECT ( DISTINCT name) FROM singer");
  EXPECT_EQ(unparsed.verdict, Verdict::kUnexecutable);
  EXPECT_EQ(unparsed.provenance, Provenance::kParse);
}

TEST_F(ExecEvalTest, RowPairingAudit) {
  const Label l = label_prediction(db("concert"), "SELECT name, age FROM singer WHERE country = 'France'",
                                   "SELECT name, 93 - age FROM singer WHERE country = 'France'");
  EXPECT_TRUE(l.correct());
  EXPECT_TRUE(l.row_pairing_disagrees);
}

TEST_F(ExecEvalTest, GoldFailureIsDataError) {
  EXPECT_THROW(label_prediction(db("concert"), "SELECT nonexistent FROM singer", "SELECT 1"), DataError);
  EXPECT_THROW(label_prediction(db("concert"), "SELEC x", "SELECT 1"), DataError);
}

TEST_F(ExecEvalTest, ReferenceExamples) {
  const auto path = db("heads");
  EXPECT_EQ(label_prediction(path, reference_queries::kFestivalGold, reference_queries::kFestivalGold).verdict,
            Verdict::kCorrect);
  EXPECT_EQ(label_prediction(path, reference_queries::kHeadsGold,
                             "SELECT head.name FROM head WHERE head.age > 56 ")
                .verdict,
            Verdict::kWrong);
  for (const auto& sql : reference_queries::kValid) {
    if (sql.find("festival") == std::string::npos) continue;
    EXPECT_NE(label_prediction(path, reference_queries::kFestivalGold, sql).verdict, Verdict::kUnexecutable) << sql;
  }
}

TEST_F(ExecEvalTest, SelfEquivalenceAndSurfaceInvariance) {
  const std::vector<std::string> queries = {
      "SELECT name FROM singer", "SELECT country, COUNT(*) FROM singer GROUP BY country",
      "SELECT name FROM singer ORDER BY age DESC LIMIT 2", "SELECT AVG(age) FROM singer",
      "SELECT name FROM singer WHERE age > 100"};
  for (const auto& q : queries) {
    EXPECT_TRUE(label_prediction(db("concert"), q, q).correct()) << q;
    std::string lower = q;
    for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    EXPECT_TRUE(label_prediction(db("concert"), q, "  " + lower + "  ").correct()) << q;
  }
}

TEST_F(ExecEvalTest, LimitEqualsLimitRemoved) {
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"SELECT name FROM singer", "SELECT name FROM singer ORDER BY age"},
      {"SELECT name FROM singer ORDER BY age", "SELECT name FROM singer ORDER BY name"},
      {"SELECT age FROM singer WHERE age > 30", "SELECT age FROM singer WHERE age > 40"}};
  for (const auto& [g, p] : pairs) {
    EXPECT_EQ(label_prediction(db("concert"), g + " LIMIT 2", p + " LIMIT 2").verdict,
              label_prediction(db("concert"), g, p).verdict)
        << g << " / " << p;
  }
}

TEST_F(ExecEvalTest, ParserEvaluationSuite) {
  const auto beams = testing::crafted_parser_beams();
  ASSERT_EQ(beams.size(), 10u);
  const ParserEvaluation ev = evaluate_parser(beams, *root_);
  EXPECT_EQ(ev.examples, 10u);
  EXPECT_EQ(ev.disagreement, 4u);
  EXPECT_DOUBLE_EQ(ev.accuracy, 0.7);
  EXPECT_DOUBLE_EQ(ev.naive_accuracy, 0.5);

  // Perfect predictions agree everywhere except on undecodable text, where
  // the naive comparison still fails.
  auto perfect = beams;
  for (auto& b : perfect) b.predictions[0].sql = b.gold_sql;
  const ParserEvaluation p = evaluate_parser(perfect, *root_);
  EXPECT_EQ(p.accuracy, 1.0);
  EXPECT_EQ(p.disagreement, 1u);
  EXPECT_EQ(p.disagreeing_ids, std::vector<std::string>{"utf8_filter"});
  std::erase_if(perfect, [](const BeamRecord& b) { return b.db_id == "legacy"; });
  const ParserEvaluation clean = evaluate_parser(perfect, *root_);
  EXPECT_EQ(clean.accuracy, 1.0);
  EXPECT_EQ(clean.naive_accuracy, 1.0);
  EXPECT_EQ(clean.disagreement, 0u);
}

TEST_F(ExecEvalTest, LabelBeamsWithWorkersAndCache) {
  auto a = testing::crafted_parser_beams();
  auto b = a;
  label_beams(a, *root_, {}, 1);
  const auto cache_path = *root_ / "labels.tsv";
  {
    LabelCache cache(cache_path);
    label_beams(b, *root_, {}, 3, &cache);
    EXPECT_EQ(cache.size(), 10u);
    cache.save();
  }
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].predictions[0].label, b[i].predictions[0].label);
  LabelCache reloaded(cache_path);
  EXPECT_EQ(reloaded.size(), 10u);
  auto c = testing::crafted_parser_beams();
  std::filesystem::path nowhere = *root_ / "no_such_root";
  label_beams(c, nowhere, {}, 1, &reloaded);  // every label served from the cache
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].predictions[0].label, c[i].predictions[0].label);
  EXPECT_FALSE(reloaded.find("concert", "x", "y", {}).has_value());
  EXPECT_FALSE(reloaded.find(a[0].db_id, a[0].gold_sql, a[0].predictions[0].sql, PipelineOptions::naive()));
}

}  // namespace
}  // namespace sqled
