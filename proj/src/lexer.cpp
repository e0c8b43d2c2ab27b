#include <cctype>
#include <set>

#include "rpz/frontend.hpp"

namespace rpz {

namespace {

const std::set<std::string>& keywords() {
  static const std::set<std::string> k = {
      "let",  "node",   "proba", "where",  "rec",    "and",    "init",  "last", "present", "else",
      "reset", "every", "sample", "observe", "factor", "infer", "pre",  "if",   "then",    "true",
      "false", "not"};
  return k;
}

// Longest match first.
const char* const kSymbols[] = {"->", "+.", "-.", "*.", "/.", "+@", "-@", "*@", "<=", ">=", "<>", "&&", "||",
                                "(",  ")",  ",",  "=",  "+",  "-",  "*",  "/",  "<",  ">",  "_"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; }

}  // namespace

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    SrcLoc loc{line, col};
    if (c == '(' && i + 1 < src.size() && src[i + 1] == '*') {
      int depth = 0;
      do {
        if (i + 1 < src.size() && src[i] == '(' && src[i + 1] == '*') {
          ++depth;
          advance(2);
        } else if (i + 1 < src.size() && src[i] == '*' && src[i + 1] == ')') {
          --depth;
          advance(2);
        } else if (i < src.size()) {
          advance(1);
        }
        if (i >= src.size() && depth > 0) throw Error(ErrorKind::Syntax, "unterminated comment at " + loc.str());
      } while (depth > 0);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      bool is_float = false;
      // A trailing '.' belongs to the number unless it starts a dotted operator.
      if (j < src.size() && src[j] == '.') {
        is_float = true;
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          is_float = true;
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      out.push_back({is_float ? Token::Type::Float : Token::Type::Int, src.substr(i, j - i), loc});
      advance(j - i);
      continue;
    }
    if (ident_start(c) && !(c == '_' && (i + 1 >= src.size() || !ident_char(src[i + 1])))) {
      std::size_t j = i + 1;
      while (j < src.size() && ident_char(src[j])) ++j;
      std::string word = src.substr(i, j - i);
      out.push_back({keywords().count(word) ? Token::Type::Keyword : Token::Type::Ident, word, loc});
      advance(j - i);
      continue;
    }
    bool matched = false;
    for (const char* s : kSymbols) {
      std::string sym(s);
      if (src.compare(i, sym.size(), sym) == 0) {
        out.push_back({Token::Type::Symbol, sym, loc});
        advance(sym.size());
        matched = true;
        break;
      }
    }
    if (!matched) throw Error(ErrorKind::Syntax, "unexpected character '" + std::string(1, c) + "' at " + loc.str());
  }
  out.push_back({Token::Type::End, "", SrcLoc{line, col}});
  return out;
}

}  // namespace rpz
