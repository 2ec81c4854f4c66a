#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sqled/label.h"

namespace sqled {

inline constexpr std::size_t kDropoutPasses = 10;

struct Prediction {
  std::string sql;
  double parser_score = 0.0;  // log-probability or ranking score
  std::optional<std::vector<double>> dropout_scores;
  std::optional<Label> label;
};

struct BeamRecord {
  std::string question_id;
  std::string db_id;
  std::string question;
  std::string gold_sql;
  std::vector<Prediction> predictions;  // parser rank order
  std::optional<std::string> difficulty;
};

// Line-delimited JSON, one beam per line.
std::vector<BeamRecord> load_beams(std::istream& in);
std::vector<BeamRecord> load_beams(const std::filesystem::path& path);
void write_beams(std::ostream& out, const std::vector<BeamRecord>& beams);
void write_beams(const std::filesystem::path& path, const std::vector<BeamRecord>& beams);

// Merges predictions with the same normalized SQL (keeping the maximum parser
// score at the earliest rank) and keeps at most `cap` in rank order.
BeamRecord dedup_and_cap(const BeamRecord& beam, std::size_t cap = 5);

// Database id -> partition name.
struct SplitSpec {
  std::map<std::string, std::string> assignment;

  std::vector<std::string> members(const std::string& partition) const;
  const std::string& partition_of(const std::string& db_id) const;
};

// Seeded partition into halves "A" and "B" (sizes differ by at most one).
SplitSpec cross_domain_halves(std::vector<std::string> db_ids, std::uint64_t seed);
// Database-level split into "train" and "dev" (80:20).
SplitSpec train_dev_split(const std::vector<BeamRecord>& beams, std::uint64_t seed,
                          double dev_fraction = 0.2);

std::vector<std::string> distinct_db_ids(const std::vector<BeamRecord>& beams);
std::vector<BeamRecord> select_partition(const std::vector<BeamRecord>& beams,
                                         const SplitSpec& split, const std::string& partition);

void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& db_ids);
std::vector<std::string> read_manifest(const std::filesystem::path& path);

// Drops beams whose top prediction is unexecutable, then unexecutable
// members of the remaining beams. Throws DataError when labels are missing.
std::vector<BeamRecord> filter_executable(const std::vector<BeamRecord>& beams);

struct CorpusStats {
  std::size_t beam_count = 0;
  std::size_t hits_total = 0;
  double hits_avg_per_beam = 0.0;
  std::size_t misses_total = 0;
  double misses_avg_per_beam = 0.0;
};

CorpusStats corpus_stats(const std::vector<BeamRecord>& beams);

// Rows of (split name, stats) rendered as "total/avg" columns.
std::string format_stats_table(const std::vector<std::pair<std::string, CorpusStats>>& rows);

// Fisher-Yates with raw engine output, reproducible across standard libraries.
template <class T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace sqled
