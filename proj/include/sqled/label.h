#pragma once

#include <string>
#include <string_view>

namespace sqled {

enum class Verdict { kCorrect, kWrong, kUnexecutable };

// Which comparison path decided a label.
enum class Provenance {
  kExecution,         // order-sensitive result comparison
  kOrderInsensitive,  // per-column sorted comparison
  kSetMatchFallback,  // gold result empty, decided by set match
  kParse,             // prediction outside the grammar and not executable
  kDecodeFailure,     // strict text decoding failed (naive pipeline only)
};

struct Label {
  Verdict verdict = Verdict::kWrong;
  Provenance provenance = Provenance::kExecution;
  bool limits_dropped = false;
  // Order-insensitive comparison disagreed with row-paired comparison.
  bool row_pairing_disagrees = false;

  bool correct() const { return verdict == Verdict::kCorrect; }
  friend bool operator==(const Label&, const Label&) = default;
};

std::string_view verdict_name(Verdict v);
Verdict parse_verdict(std::string_view s);
std::string_view provenance_name(Provenance p);
Provenance parse_provenance(std::string_view s);

}  // namespace sqled
