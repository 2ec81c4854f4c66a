#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sqled/dataset.h"
#include "sqled/question.h"

namespace sqled {

// Template-generated corpus: one table per database, questions with
// constituency and dependency annotations, and beams whose wrong members swap
// an aggregate, a comparison operator, or a column of the gold query.
struct SynthConfig {
  int databases = 20;
  int pairs = 2000;  // total predictions over all beams
  int beam_size = 4;
  int rows_per_table = 12;
  double top1_correct_rate = 0.6;
  std::uint64_t seed = 0;
  std::string question_prefix = "synth";
};

struct SynthCorpus {
  std::vector<BeamRecord> beams;
  AnnotationMap annotations;
  std::vector<std::string> db_ids;
};

// Writes db_root/<db>/<db>.sql and the matching .sqlite file for every
// database. Wrong beam members are checked against the database so that each
// one really changes the query result.
SynthCorpus generate_synthetic_corpus(const std::filesystem::path& db_root, const SynthConfig& config);

// Executes a SQL script into a fresh database file.
void build_database(const std::filesystem::path& sqlite_path, const std::string& script);

// Rebuilds db_root/<db>/<db>.sqlite from every db_root/<db>/<db>.sql.
// Returns the number of databases built.
int init_databases(const std::filesystem::path& db_root);

}  // namespace sqled
