#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sqled/error.h"
#include "sqled/exec_eval.h"
#include "sqled/features.h"
#include "sqled/synth.h"

namespace sqled {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sqled_synth_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string beams_text(const std::vector<BeamRecord>& beams) {
  std::ostringstream out;
  write_beams(out, beams);
  return out.str();
}

SynthConfig small() {
  SynthConfig c;
  c.databases = 5;
  c.pairs = 800;
  c.seed = 17;
  return c;
}

TEST(Synth, SeededAndReproducible) {
  const fs::path ra = fresh_dir("a"), rb = fresh_dir("b");
  const auto a = generate_synthetic_corpus(ra, small());
  const auto b = generate_synthetic_corpus(rb, small());
  EXPECT_EQ(beams_text(a.beams), beams_text(b.beams));
  EXPECT_EQ(a.db_ids, b.db_ids);
  for (const auto& db : a.db_ids) {
    EXPECT_FALSE(slurp(ra / db / (db + ".sql")).empty());
    EXPECT_EQ(slurp(ra / db / (db + ".sql")), slurp(rb / db / (db + ".sql")));
  }
  SynthConfig other = small();
  other.seed = 18;
  EXPECT_NE(beams_text(generate_synthetic_corpus(fresh_dir("c"), other).beams), beams_text(a.beams));
}

TEST(Synth, ShapeAndExecutionLabels) {
  const fs::path root = fresh_dir("shape");
  SynthCorpus c = generate_synthetic_corpus(root, small());
  EXPECT_EQ(c.db_ids.size(), 5u);
  EXPECT_EQ(distinct_db_ids(c.beams).size(), 5u);
  ASSERT_EQ(c.beams.size(), 200u);
  label_beams(c.beams, root);
  std::size_t pairs = 0, top1 = 0, absent = 0;
  for (const auto& b : c.beams) {
    ASSERT_TRUE(c.annotations.count(b.question_id));
    EXPECT_FALSE(b.question.empty());
    EXPECT_LE(b.predictions.size(), 4u);
    std::set<std::string> distinct;
    int gold = 0;
    for (std::size_t i = 0; i < b.predictions.size(); ++i) {
      const auto& p = b.predictions[i];
      distinct.insert(p.sql);
      ASSERT_TRUE(p.label.has_value());
      EXPECT_EQ(p.label->correct(), p.sql == b.gold_sql) << p.sql << " vs " << b.gold_sql;
      EXPECT_NE(p.label->verdict, Verdict::kUnexecutable);
      ASSERT_TRUE(p.dropout_scores.has_value());
      if (i > 0) {
        EXPECT_LT(p.parser_score, b.predictions[i - 1].parser_score);
      }
      gold += p.sql == b.gold_sql ? 1 : 0;
    }
    EXPECT_EQ(distinct.size(), b.predictions.size());
    EXPECT_LE(gold, 1);
    pairs += b.predictions.size();
    top1 += b.predictions[0].sql == b.gold_sql ? 1 : 0;
    absent += gold == 0 ? 1 : 0;
  }
  EXPECT_GE(pairs, 760u);
  EXPECT_NEAR(static_cast<double>(top1) / 200.0, 0.6, 0.1);
  EXPECT_GT(absent, 0u);
}

TEST(Synth, InitDatabasesRebuildsFromScripts) {
  const fs::path root = fresh_dir("init");
  SynthCorpus c = generate_synthetic_corpus(root, small());
  label_beams(c.beams, root);
  const std::string before = beams_text(c.beams);
  for (const auto& db : c.db_ids) fs::remove(database_path(root, db));
  EXPECT_EQ(init_databases(root), 5);
  for (auto& b : c.beams) {
    for (auto& p : b.predictions) p.label.reset();
  }
  label_beams(c.beams, root);
  EXPECT_EQ(beams_text(c.beams), before);
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig c = small();
  c.databases = 0;
  EXPECT_THROW(generate_synthetic_corpus(fresh_dir("bad"), c), ConfigError);
  c = small();
  c.pairs = 2;
  EXPECT_THROW(generate_synthetic_corpus(fresh_dir("bad"), c), ConfigError);
}

TEST(Features, SqlGraphFallsBackForUnparsedText) {
  const auto [good, good_tokens] = sql_graph("SELECT max(age) FROM singer WHERE age > 3", {});
  for (const auto& n : good.nodes()) EXPECT_NE(n.label, "unparsed");
  EXPECT_FALSE(good_tokens.empty());

  const auto [bad, bad_tokens] = sql_graph("SELEC age singer ((", {});
  EXPECT_EQ(bad.nodes()[0].label, "unparsed");
  EXPECT_EQ(bad.leaf_count(), bad_tokens.size());
  EXPECT_GE(bad_tokens.size(), 3u);
  const auto [empty, empty_tokens] = sql_graph("", {});
  EXPECT_EQ(empty_tokens, (std::vector<std::string>{"<empty>"}));
}

TEST(Features, ExamplesFollowLabels) {
  const fs::path root = fresh_dir("features");
  SynthConfig cfg = small();
  cfg.pairs = 80;
  SynthCorpus c = generate_synthetic_corpus(root, cfg);
  Model m;
  EXPECT_THROW(make_examples(c.beams, c.annotations, m), MissingLabels);
  label_beams(c.beams, root);

  const auto [tok, lab] = build_vocabularies(c.beams, c.annotations, {});
  EXPECT_NE(tok.id("select"), 0);
  EXPECT_NE(tok.id(c.db_ids[0].substr(0, c.db_ids[0].find('_'))), 0);
  EXPECT_GT(lab.size(), 1);
  m.tokens = tok;
  m.labels = lab;

  c.beams[0].predictions.push_back(c.beams[0].predictions[0]);
  c.beams[0].predictions.back().sql = "SELECT nope FROM nowhere";
  c.beams[0].predictions.back().label = Label{Verdict::kUnexecutable, Provenance::kExecution};
  std::size_t total = 0, positives = 0;
  for (const auto& b : c.beams) {
    total += b.predictions.size();
    for (const auto& p : b.predictions) positives += p.label->correct() ? 1 : 0;
  }
  const auto examples = make_examples(c.beams, c.annotations, m);
  EXPECT_EQ(examples.size(), total - 1);
  std::size_t labeled_positive = 0;
  for (const auto& e : examples) labeled_positive += static_cast<std::size_t>(e.label);
  EXPECT_EQ(labeled_positive, positives);
  EXPECT_EQ(examples[0].beam_id, c.beams[0].question_id);
  EXPECT_EQ(make_inputs(c.beams, c.annotations, m).size(), total);

  AnnotationMap missing = c.annotations;
  missing.erase(c.beams[1].question_id);
  EXPECT_THROW(make_examples(c.beams, missing, m), MismatchError);
}

}  // namespace
}  // namespace sqled
