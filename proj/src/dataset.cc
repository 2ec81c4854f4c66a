#include "sqled/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sqled/error.h"
#include "sqled/sql_rewrite.h"

namespace sqled {

using nlohmann::json;

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kCorrect:
      return "correct";
    case Verdict::kWrong:
      return "wrong";
    case Verdict::kUnexecutable:
      return "unexecutable";
  }
  return "?";
}

Verdict parse_verdict(std::string_view s) {
  if (s == "correct") return Verdict::kCorrect;
  if (s == "wrong") return Verdict::kWrong;
  if (s == "unexecutable") return Verdict::kUnexecutable;
  throw DataError("unknown label '" + std::string(s) + "'");
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kExecution:
      return "execution";
    case Provenance::kOrderInsensitive:
      return "order_insensitive";
    case Provenance::kSetMatchFallback:
      return "set_match";
    case Provenance::kParse:
      return "parse";
    case Provenance::kDecodeFailure:
      return "decode_failure";
  }
  return "?";
}

Provenance parse_provenance(std::string_view s) {
  if (s == "execution") return Provenance::kExecution;
  if (s == "order_insensitive") return Provenance::kOrderInsensitive;
  if (s == "set_match") return Provenance::kSetMatchFallback;
  if (s == "parse") return Provenance::kParse;
  if (s == "decode_failure") return Provenance::kDecodeFailure;
  throw DataError("unknown label provenance '" + std::string(s) + "'");
}

namespace {

Label label_from_json(const json& j) {
  Label l;
  if (j.is_string()) {
    l.verdict = parse_verdict(j.get<std::string>());
    return l;
  }
  l.verdict = parse_verdict(j.at("verdict").get<std::string>());
  if (j.contains("provenance")) l.provenance = parse_provenance(j["provenance"].get<std::string>());
  l.limits_dropped = j.value("limits_dropped", false);
  l.row_pairing_disagrees = j.value("row_pairing_disagrees", false);
  return l;
}

json label_to_json(const Label& l) {
  json j = {{"verdict", verdict_name(l.verdict)}, {"provenance", provenance_name(l.provenance)}};
  if (l.limits_dropped) j["limits_dropped"] = true;
  if (l.row_pairing_disagrees) j["row_pairing_disagrees"] = true;
  return j;
}

BeamRecord beam_from_json(const json& j, std::size_t lineno) {
  auto required_string = [&](const char* field) {
    if (!j.contains(field) || !j[field].is_string()) {
      throw FormatError(lineno, std::string("missing string field '") + field + "'");
    }
    return j[field].get<std::string>();
  };
  BeamRecord b;
  b.question_id = required_string("question_id");
  b.db_id = required_string("db_id");
  b.question = required_string("question");
  b.gold_sql = required_string("gold_sql");
  if (j.contains("difficulty") && !j["difficulty"].is_null()) {
    b.difficulty = j["difficulty"].get<std::string>();
  }
  if (!j.contains("predictions") || !j["predictions"].is_array()) {
    throw FormatError(lineno, "missing predictions array");
  }
  for (const auto& p : j["predictions"]) {
    Prediction pred;
    if (!p.contains("sql") || !p["sql"].is_string()) {
      throw FormatError(lineno, "prediction without sql");
    }
    pred.sql = p["sql"].get<std::string>();
    if (!p.contains("parser_score") || !p["parser_score"].is_number()) {
      throw FormatError(lineno, "prediction without numeric parser_score");
    }
    pred.parser_score = p["parser_score"].get<double>();
    if (p.contains("dropout_scores") && !p["dropout_scores"].is_null()) {
      auto scores = p["dropout_scores"].get<std::vector<double>>();
      if (scores.size() != kDropoutPasses) {
        throw FormatError(lineno, "dropout_scores must have exactly 10 values");
      }
      pred.dropout_scores = std::move(scores);
    }
    if (p.contains("label") && !p["label"].is_null()) pred.label = label_from_json(p["label"]);
    b.predictions.push_back(std::move(pred));
  }
  if (b.predictions.empty()) throw FormatError(lineno, "beam without predictions");
  return b;
}

json beam_to_json(const BeamRecord& b) {
  json j;
  j["question_id"] = b.question_id;
  j["db_id"] = b.db_id;
  j["question"] = b.question;
  j["gold_sql"] = b.gold_sql;
  if (b.difficulty) j["difficulty"] = *b.difficulty;
  json preds = json::array();
  for (const auto& p : b.predictions) {
    json pj = {{"sql", p.sql}, {"parser_score", p.parser_score}};
    if (p.dropout_scores) pj["dropout_scores"] = *p.dropout_scores;
    if (p.label) pj["label"] = label_to_json(*p.label);
    preds.push_back(std::move(pj));
  }
  j["predictions"] = std::move(preds);
  return j;
}

}  // namespace

std::vector<BeamRecord> load_beams(std::istream& in) {
  std::vector<BeamRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(lineno, e.what());
    }
    if (!j.is_object()) throw FormatError(lineno, "record is not an object");
    BeamRecord b;
    try {
      b = beam_from_json(j, lineno);
    } catch (const json::exception& e) {
      throw FormatError(lineno, e.what());
    }
    if (!seen.insert(b.question_id).second) {
      throw DuplicateQuestion(b.question_id);
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<BeamRecord> load_beams(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open beam file " + path.string());
  return load_beams(in);
}

void write_beams(std::ostream& out, const std::vector<BeamRecord>& beams) {
  for (const auto& b : beams) out << beam_to_json(b).dump() << '\n';
}

void write_beams(const std::filesystem::path& path, const std::vector<BeamRecord>& beams) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_beams(out, beams);
}

BeamRecord dedup_and_cap(const BeamRecord& beam, std::size_t cap) {
  BeamRecord out = beam;
  out.predictions.clear();
  std::map<std::string, std::size_t> index;
  for (const auto& p : beam.predictions) {
    const std::string key = normalized_sql_key(p.sql);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, out.predictions.size());
      out.predictions.push_back(p);
    } else {
      auto& kept = out.predictions[it->second];
      kept.parser_score = std::max(kept.parser_score, p.parser_score);
    }
  }
  if (out.predictions.size() > cap) out.predictions.resize(cap);
  return out;
}

std::vector<std::string> SplitSpec::members(const std::string& partition) const {
  std::vector<std::string> out;
  for (const auto& [db, part] : assignment) {
    if (part == partition) out.push_back(db);
  }
  return out;
}

const std::string& SplitSpec::partition_of(const std::string& db_id) const {
  auto it = assignment.find(db_id);
  if (it == assignment.end()) throw DataError("database " + db_id + " is not in the split");
  return it->second;
}

namespace {

std::vector<std::string> unique_sorted(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace

SplitSpec cross_domain_halves(std::vector<std::string> db_ids, std::uint64_t seed) {
  db_ids = unique_sorted(std::move(db_ids));
  if (db_ids.size() < 2) throw TooFewDatabases(db_ids.size(), 2);
  std::mt19937_64 rng(seed);
  seeded_shuffle(db_ids, rng);
  SplitSpec split;
  const std::size_t half = db_ids.size() / 2;
  for (std::size_t i = 0; i < db_ids.size(); ++i) {
    split.assignment[db_ids[i]] = i < half ? "A" : "B";
  }
  return split;
}

std::vector<std::string> distinct_db_ids(const std::vector<BeamRecord>& beams) {
  std::vector<std::string> ids;
  for (const auto& b : beams) ids.push_back(b.db_id);
  return unique_sorted(std::move(ids));
}

SplitSpec train_dev_split(const std::vector<BeamRecord>& beams, std::uint64_t seed,
                          double dev_fraction) {
  auto ids = distinct_db_ids(beams);
  if (ids.size() < 2) throw TooFewDatabases(ids.size(), 2);
  std::mt19937_64 rng(seed);
  seeded_shuffle(ids, rng);
  std::size_t dev = static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(ids.size())));
  dev = std::clamp<std::size_t>(dev, 1, ids.size() - 1);
  SplitSpec split;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    split.assignment[ids[i]] = i < ids.size() - dev ? "train" : "dev";
  }
  return split;
}

std::vector<BeamRecord> select_partition(const std::vector<BeamRecord>& beams,
                                         const SplitSpec& split, const std::string& partition) {
  std::vector<BeamRecord> out;
  for (const auto& b : beams) {
    auto it = split.assignment.find(b.db_id);
    if (it != split.assignment.end() && it->second == partition) out.push_back(b);
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& db_ids) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& id : db_ids) out << id << '\n';
}

std::vector<std::string> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::vector<BeamRecord> filter_executable(const std::vector<BeamRecord>& beams) {
  std::vector<BeamRecord> out;
  for (const auto& b : beams) {
    for (const auto& p : b.predictions) {
      if (!p.label) throw MissingLabels(b.question_id);
    }
    if (b.predictions.front().label->verdict == Verdict::kUnexecutable) continue;
    BeamRecord kept = b;
    std::erase_if(kept.predictions,
                  [](const Prediction& p) { return p.label->verdict == Verdict::kUnexecutable; });
    out.push_back(std::move(kept));
  }
  return out;
}

CorpusStats corpus_stats(const std::vector<BeamRecord>& beams) {
  CorpusStats s;
  s.beam_count = beams.size();
  for (const auto& b : beams) {
    for (const auto& p : b.predictions) {
      if (!p.label) throw MissingLabels(b.question_id);
      if (p.label->verdict == Verdict::kCorrect) {
        ++s.hits_total;
      } else if (p.label->verdict == Verdict::kWrong) {
        ++s.misses_total;
      }
    }
  }
  if (s.beam_count > 0) {
    s.hits_avg_per_beam = static_cast<double>(s.hits_total) / static_cast<double>(s.beam_count);
    s.misses_avg_per_beam = static_cast<double>(s.misses_total) / static_cast<double>(s.beam_count);
  }
  return s;
}

std::string format_stats_table(const std::vector<std::pair<std::string, CorpusStats>>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "Split" << std::right << std::setw(8) << "#Beams"
      << std::setw(16) << "Beam Hits" << std::setw(16) << "Beam Misses" << '\n';
  auto cell = [](std::size_t total, double avg) {
    std::ostringstream c;
    c << total << '/' << std::fixed << std::setprecision(1) << avg;
    return c.str();
  };
  for (const auto& [name, s] : rows) {
    out << std::left << std::setw(12) << name << std::right << std::setw(8) << s.beam_count
        << std::setw(16) << cell(s.hits_total, s.hits_avg_per_beam) << std::setw(16)
        << cell(s.misses_total, s.misses_avg_per_beam) << '\n';
  }
  return out.str();
}

}  // namespace sqled
