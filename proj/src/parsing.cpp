// SPDX-License-Identifier: Apache-2.0
#include "finpref/parsing.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <vector>

#include "finpref/error.hpp"

namespace finpref {

const char* to_string(ParseStatus s) noexcept {
  switch (s) {
    case ParseStatus::Ok: return "ok";
    case ParseStatus::Unparseable: return "unparseable";
    case ParseStatus::Ambiguous: return "ambiguous";
    case ParseStatus::OutOfDomain: return "out_of_domain";
  }
  return "unknown";
}

const char* to_string(Letter l) noexcept { return l == Letter::A ? "A" : "B"; }

namespace {

bool is_ascii_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_alnum(unsigned char c) { return is_ascii_alpha(c) || is_digit(c); }
char lower(unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); }

struct Token {
  std::string text;   // original case
  std::string low;    // lower-cased
  std::size_t begin;  // byte offsets into the input
  std::size_t end;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_alnum(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    Token t;
    while (j < s.size() && is_alnum(static_cast<unsigned char>(s[j]))) {
      t.text.push_back(s[j]);
      t.low.push_back(lower(static_cast<unsigned char>(s[j])));
      ++j;
    }
    t.begin = i;
    t.end = j;
    out.push_back(std::move(t));
    i = j;
  }
  return out;
}

std::optional<Letter> letter_of(const Token& t) {
  if (t.low == "a") return Letter::A;
  if (t.low == "b") return Letter::B;
  return std::nullopt;
}

// Characters that may decorate a bare letter answer: "**B**", "(a)", "'A'.".
bool is_decoration(unsigned char c) {
  switch (c) {
    case ' ': case '\t': case '\n': case '\r': case '*': case '(': case ')': case '[':
    case ']': case '.': case ':': case '!': case '"': case '\'': case '`': case '_':
      return true;
    default:
      return false;
  }
}

bool only_decoration(std::string_view s) {
  for (unsigned char c : s)
    if (!is_decoration(c)) return false;
  return true;
}

bool is_keyword(std::string_view w) {
  static const std::set<std::string, std::less<>> kw = {
      "option", "choice", "answer", "alternative", "lottery", "offer", "letter"};
  return kw.contains(w);
}

// Words that commonly follow a standalone capital "A" used as an answer rather
// than as the indefinite article ("A is better", "A or B", "A because ...").
bool is_answer_follower(std::string_view w) {
  static const std::set<std::string, std::less<>> words = {
      "is", "or", "and", "because", "since", "as", "would", "seems", "looks", "it",
      "please", "for", "offers", "gives", "provides", "wins", "sounds", "feels", "then"};
  return words.contains(w);
}

}  // namespace

ParseOutcome parse_choice(std::string_view text) {
  ParseOutcome out;
  const std::vector<Token> tokens = tokenize(text);

  auto found = [&](Letter l) {
    out.status = ParseStatus::Ok;
    out.value = Choice{l};
    return out;
  };

  // Whole answer is a decorated single letter.
  if (tokens.size() == 1) {
    const auto l = letter_of(tokens[0]);
    if (l && only_decoration(text.substr(0, tokens[0].begin)) &&
        only_decoration(text.substr(tokens[0].end)))
      return found(*l);
  }

  std::set<Letter> decisive;
  std::set<Letter> weak;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const Token& t = tokens[k];
    const auto l = letter_of(t);
    if (!l) continue;
    const unsigned char before = t.begin > 0 ? static_cast<unsigned char>(text[t.begin - 1]) : 0;
    const unsigned char after = t.end < text.size() ? static_cast<unsigned char>(text[t.end]) : 0;

    bool strong = false;
    // "option B", "answer: a", "my answer is B"
    if (k > 0) {
      std::size_t p = k - 1;
      if (tokens[p].low == "is" && p > 0) --p;
      bool gaps_clean = only_decoration(text.substr(tokens[k - 1].end, t.begin - tokens[k - 1].end));
      if (p + 1 < k)
        gaps_clean = gaps_clean &&
                     only_decoration(text.substr(tokens[p].end, tokens[p + 1].begin - tokens[p].end));
      if (is_keyword(tokens[p].low) && gaps_clean &&
          (tokens[p].low != "lottery" || k == p + 1))
        strong = true;
    }
    // "(a)", "[B]", "**A**"
    if ((before == '(' && after == ')') || (before == '[' && after == ']') ||
        (before == '*' && after == '*'))
      strong = true;
    // "A." / "b)" / "A:" opening the answer
    if (k == 0 && only_decoration(text.substr(0, t.begin)) &&
        (after == '.' || after == ')' || after == ':'))
      strong = true;

    if (strong) {
      decisive.insert(*l);
      continue;
    }
    const bool word_follows = after == ' ' && k + 1 < tokens.size() && tokens[k + 1].begin == t.end + 1;
    if (t.text == "a" && word_follows) continue;  // indefinite article
    if (t.text == "A" && word_follows &&
        std::islower(static_cast<unsigned char>(tokens[k + 1].text[0])) &&
        !is_answer_follower(tokens[k + 1].low))
      continue;  // "A payment of ..." style article
    weak.insert(*l);
  }

  const std::set<Letter>& pool = decisive.empty() ? weak : decisive;
  if (pool.size() == 1) return found(*pool.begin());
  if (pool.size() > 1) {
    out.status = ParseStatus::Ambiguous;
    out.detail = "both A and B are candidate answers";
    return out;
  }
  out.status = ParseStatus::Unparseable;
  out.detail = "no letter answer found";
  return out;
}

ParseOutcome parse_amount(std::string_view text) {
  ParseOutcome out;
  const std::size_t n = text.size();
  auto at = [&](std::size_t i) -> unsigned char {
    return i < n ? static_cast<unsigned char>(text[i]) : 0;
  };

  std::size_t i = 0;
  while (i < n && !is_digit(at(i))) ++i;
  if (i == n) {
    out.status = ParseStatus::Unparseable;
    out.detail = "no numeric literal";
    return out;
  }

  std::string literal;
  std::size_t start = i;
  // ".5" style leading decimal point
  if (i > 0 && at(i - 1) == '.' && (i < 2 || !is_digit(at(i - 2)))) {
    literal = "0";
    start = --i;
  } else {
    while (is_digit(at(i))) literal.push_back(static_cast<char>(text[i++]));
    while (at(i) == ',' && is_digit(at(i + 1)) && is_digit(at(i + 2)) && is_digit(at(i + 3)) &&
           !is_digit(at(i + 4))) {
      literal.append(text.substr(i + 1, 3));
      i += 4;
    }
  }
  if (at(i) == '.' && is_digit(at(i + 1))) {
    literal.push_back('.');
    ++i;
    while (is_digit(at(i))) literal.push_back(static_cast<char>(text[i++]));
  }

  // Sign: "-5", "-$5", "$-5", or U+2212 MINUS SIGN, not preceded by a word char.
  bool negative = false;
  std::size_t s = start;
  if (s > 0 && at(s - 1) == '$') --s;
  auto unsigned_context = [&](std::size_t pos) { return pos == 0 || !is_alnum(at(pos - 1)); };
  if (s > 0 && at(s - 1) == '-' && unsigned_context(s - 1)) {
    negative = true;
  } else if (s >= 3 && at(s - 3) == 0xE2 && at(s - 2) == 0x88 && at(s - 1) == 0x92 &&
             unsigned_context(s - 3)) {
    negative = true;
  }

  double value = 0.0;
  const auto res = std::from_chars(literal.data(), literal.data() + literal.size(), value);
  if (res.ec == std::errc::result_out_of_range || !std::isfinite(value)) {
    out.status = ParseStatus::OutOfDomain;
    out.detail = "numeric literal out of range";
    return out;
  }
  if (res.ec != std::errc{}) {
    out.status = ParseStatus::Unparseable;
    out.detail = "malformed numeric literal";
    return out;
  }
  if (negative && value != 0.0) {
    out.status = ParseStatus::OutOfDomain;
    out.detail = "negative amount";
    return out;
  }
  out.status = ParseStatus::Ok;
  out.value = Amount{value};
  return out;
}

ParseOutcome parse_for_item(const SurveyItem& item, std::string_view text) {
  return item.kind == ItemKind::BinaryChoice ? parse_choice(text) : parse_amount(text);
}

const ParsedAnswer& validate_answer(const SurveyItem& item, const ParsedAnswer& answer) {
  const bool is_choice = std::holds_alternative<Choice>(answer);
  if (is_choice != (item.kind == ItemKind::BinaryChoice))
    fail(ErrorKind::KindMismatch, "item " + std::to_string(item.id) + " expects " +
                                      (item.kind == ItemKind::BinaryChoice ? "a letter choice"
                                                                           : "an amount"));
  if (const auto* a = std::get_if<Amount>(&answer)) {
    if (!std::isfinite(a->value) || a->value < 0)
      fail(ErrorKind::Domain, "item " + std::to_string(item.id) + " amount out of domain");
  }
  return answer;
}

std::string format_answer(const ParsedAnswer& answer) {
  if (const auto* c = std::get_if<Choice>(&answer)) return to_string(c->value);
  const double v = std::get<Amount>(answer).value;
  std::array<char, 400> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
  return std::string(buf.data(), res.ptr);
}

}  // namespace finpref
