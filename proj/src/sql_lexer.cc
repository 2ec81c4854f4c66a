#include <algorithm>
#include <array>
#include <cctype>

#include "sqled/error.h"
#include "sqled/sql.h"

namespace sqled {

namespace {

constexpr std::array<std::string_view, 45> kKeywords = {
    "SELECT", "DISTINCT", "ALL",     "FROM",  "WHERE",  "GROUP",     "ORDER",   "BY",
    "HAVING", "LIMIT",    "OFFSET",  "AS",    "JOIN",   "INNER",     "LEFT",    "RIGHT",
    "FULL",   "OUTER",    "CROSS",   "NATURAL", "ON",   "USING",     "AND",     "OR",
    "NOT",    "IN",       "LIKE",    "GLOB",  "BETWEEN", "IS",       "NULL",    "EXISTS",
    "UNION",  "INTERSECT", "EXCEPT", "ASC",   "DESC",   "CASE",      "WHEN",    "THEN",
    "ELSE",   "END",      "CAST",    "ESCAPE", "COLLATE"};

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_keyword(std::string_view word) {
  const std::string u = upper(word);
  return std::find(kKeywords.begin(), kKeywords.end(), u) != kKeywords.end();
}

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

// Strips the surrounding quote pair and undoubles embedded quotes.
std::string unquote(std::string_view text) {
  if (text.size() < 2) return std::string(text);
  const char open = text.front();
  const char close = open == '[' ? ']' : open;
  std::string out;
  for (std::size_t i = 1; i + 1 < text.size(); ++i) {
    out.push_back(text[i]);
    if (text[i] == close && open != '[' && i + 2 < text.size() && text[i + 1] == close) ++i;
  }
  return out;
}

}  // namespace

std::string_view token_kind_name(TokenKind k) {
  switch (k) {
    case TokenKind::kKeyword:
      return "keyword";
    case TokenKind::kIdentifier:
      return "identifier";
    case TokenKind::kNumber:
      return "number";
    case TokenKind::kString:
      return "string";
    case TokenKind::kOperator:
      return "operator";
    case TokenKind::kPunctuation:
      return "punctuation";
  }
  return "?";
}

std::string SqlToken::canonical() const {
  switch (kind) {
    case TokenKind::kKeyword: {
      // Collapse inner whitespace of GROUP BY / ORDER BY.
      std::string out;
      bool space = false;
      for (char c : upper(text)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
          space = true;
          continue;
        }
        if (space && !out.empty()) out.push_back(' ');
        space = false;
        out.push_back(c);
      }
      return out;
    }
    case TokenKind::kIdentifier:
      if (!text.empty() && (text.front() == '`' || text.front() == '[')) return lower(unquote(text));
      return lower(text);
    case TokenKind::kString: {
      std::string value = unquote(text);
      std::string out = "'";
      for (char c : value) {
        out.push_back(c);
        if (c == '\'') out.push_back('\'');
      }
      out.push_back('\'');
      return out;
    }
    default:
      return text;
  }
}

bool SqlToken::is(std::string_view keyword) const {
  return kind == TokenKind::kKeyword && canonical() == keyword;
}

bool SqlToken::is_symbol(std::string_view symbol) const {
  return (kind == TokenKind::kOperator || kind == TokenKind::kPunctuation) && text == symbol;
}

std::vector<SqlToken> tokenize(std::string_view sql) {
  std::vector<SqlToken> out;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  auto emit = [&](std::size_t begin, std::size_t end, TokenKind kind) {
    out.push_back({std::string(sql.substr(begin, end - begin)), kind, begin, end});
  };
  auto skip_space = [&](std::size_t p) {
    while (p < n && std::isspace(static_cast<unsigned char>(sql[p]))) ++p;
    return p;
  };

  while (true) {
    i = skip_space(i);
    if (i >= n) break;
    const unsigned char c = static_cast<unsigned char>(sql[i]);
    const std::size_t start = i;

    if (ident_start(c)) {
      while (i < n && ident_char(static_cast<unsigned char>(sql[i]))) ++i;
      const std::string word = upper(sql.substr(start, i - start));
      bool folded = false;
      if (word == "GROUP" || word == "ORDER") {
        // Fold the following BY into the same token.
        std::size_t j = skip_space(i);
        std::size_t k = j;
        while (k < n && ident_char(static_cast<unsigned char>(sql[k]))) ++k;
        if (k > j && upper(sql.substr(j, k - j)) == "BY") {
          i = k;
          folded = true;
        }
      }
      emit(start, i, folded || is_keyword(word) ? TokenKind::kKeyword : TokenKind::kIdentifier);
      continue;
    }

    if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
      if (i < n && sql[i] == '.') {
        ++i;
        while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
      }
      if (i < n && (sql[i] == 'e' || sql[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < n && (sql[j] == '+' || sql[j] == '-')) ++j;
        if (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) {
          i = j;
          while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
        }
      }
      if (i < n && ident_start(static_cast<unsigned char>(sql[i]))) {
        throw LexError(i, "malformed number");
      }
      emit(start, i, TokenKind::kNumber);
      continue;
    }

    if (c == '\'' || c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : static_cast<char>(c);
      ++i;
      bool closed = false;
      while (i < n) {
        if (sql[i] == close) {
          if (close != ']' && i + 1 < n && sql[i + 1] == close) {
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        ++i;
      }
      if (!closed) throw LexError(start, "unterminated quoted token");
      const TokenKind kind =
          (c == '\'' || c == '"') ? TokenKind::kString : TokenKind::kIdentifier;
      emit(start, i, kind);
      continue;
    }

    // Two-character operators first.
    static constexpr std::array<std::string_view, 8> kTwo = {"<=", ">=", "<>", "!=", "==",
                                                             "||", "<<", ">>"};
    bool matched = false;
    for (auto op : kTwo) {
      if (sql.substr(i, 2) == op) {
        emit(i, i + 2, TokenKind::kOperator);
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;

    switch (c) {
      case '<':
      case '>':
      case '=':
      case '+':
      case '-':
      case '*':
      case '/':
      case '%':
      case '&':
      case '|':
      case '~':
        emit(i, i + 1, TokenKind::kOperator);
        ++i;
        break;
      case '(':
      case ')':
      case ',':
      case '.':
      case ';':
        emit(i, i + 1, TokenKind::kPunctuation);
        ++i;
        break;
      default:
        throw LexError(i, std::string("illegal character '") + static_cast<char>(c) + "'");
    }
  }
  return out;
}

}  // namespace sqled
