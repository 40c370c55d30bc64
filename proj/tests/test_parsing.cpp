// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cmath>
#include <random>

#include "finpref/parsing.hpp"
#include "parser_corpus.hpp"
#include "test_util.hpp"

using namespace finpref;
using testutil::kind_of;

namespace {

ParseOutcome parse(corpus::Kind k, std::string_view text) {
  return k == corpus::Kind::Choice ? parse_choice(text) : parse_amount(text);
}

double numeric(const ParsedAnswer& a) {
  if (const auto* c = std::get_if<Choice>(&a)) return c->value == Letter::A ? 0.0 : 1.0;
  return std::get<Amount>(a).value;
}

// Random UTF-8 built from code points biased towards characters the parsers inspect.
std::string random_utf8(std::mt19937_64& rng) {
  static const std::string alphabet = "0123456789AaBb$,.-()[]*: \n\toptionanswer";
  std::uniform_int_distribution<int> len(0, 40);
  std::uniform_int_distribution<int> pick(0, 9);
  std::string out;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    const int r = pick(rng);
    char32_t cp;
    if (r < 6) {
      out.push_back(alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)]);
      continue;
    } else if (r < 7) {
      cp = 0x2212;  // minus sign
    } else if (r < 8) {
      cp = std::uniform_int_distribution<char32_t>(0x80, 0x7FF)(rng);
    } else if (r < 9) {
      cp = std::uniform_int_distribution<char32_t>(0x800, 0xFFFF)(rng);
      if (cp >= 0xD800 && cp <= 0xDFFF) cp = 0xFFFD;
    } else {
      cp = std::uniform_int_distribution<char32_t>(0x10000, 0x10FFFF)(rng);
    }
    if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

void check_total(const ParseOutcome& o) {
  CHECK((o.status == ParseStatus::Ok) == o.value.has_value());
  if (o.value) {
    if (const auto* a = std::get_if<Amount>(&*o.value)) {
      CHECK(std::isfinite(a->value));
      CHECK(a->value >= 0.0);
    }
  } else {
    CHECK(!o.detail.empty());
  }
}

}  // namespace

TEST_SUITE("parsing") {
  TEST_CASE("labelled corpus") {
    REQUIRE(corpus::cases().size() == 50);
    for (const auto& c : corpus::cases()) {
      CAPTURE(c.text);
      const ParseOutcome o = parse(c.kind, c.text);
      CHECK(o.status == c.status);
      if (c.status == ParseStatus::Ok) {
        REQUIRE(o.value.has_value());
        CHECK(numeric(*o.value) == c.value);
      }
    }
  }

  TEST_CASE("thousand separators and decimals agree") {
    for (const char* t : {"3,800", "3800", "3800.00", "$3,800.00", "3,800 dollars", "USD 3800"}) {
      CAPTURE(t);
      const auto o = parse_amount(t);
      REQUIRE(o.ok());
      CHECK(std::get<Amount>(*o.value).value == 3800.0);
    }
  }

  TEST_CASE("first number wins") {
    const auto o = parse_amount("240, because 60% of 400 is 240");
    REQUIRE(o.ok());
    CHECK(std::get<Amount>(*o.value).value == 240.0);
    // A malformed group stops the literal instead of being merged.
    CHECK(std::get<Amount>(*parse_amount("1,00").value).value == 1.0);
    CHECK(std::get<Amount>(*parse_amount("1,0000").value).value == 1.0);
  }

  TEST_CASE("hyphen inside a word is not a sign") {
    const auto o = parse_amount("COVID-19 aside");
    REQUIRE(o.ok());
    CHECK(std::get<Amount>(*o.value).value == 19.0);
  }

  TEST_CASE("articles are not answers") {
    CHECK(parse_choice("a payment now sounds fine").status == ParseStatus::Unparseable);
    CHECK(parse_choice("A payment now sounds fine").status == ParseStatus::Unparseable);
    CHECK(std::get<Choice>(*parse_choice("A is my pick").value).value == Letter::A);
    CHECK(std::get<Choice>(*parse_choice("I pick a, the sure payment").value).value == Letter::A);
  }

  TEST_CASE("parse_for_item dispatches on the item kind") {
    const auto& s = canonical_survey();
    CHECK(std::holds_alternative<Choice>(*parse_for_item(s.item(1), "B").value));
    CHECK(std::holds_alternative<Amount>(*parse_for_item(s.item(2), "105").value));
    CHECK(parse_for_item(s.item(2), "B").status == ParseStatus::Unparseable);
  }

  TEST_CASE("validate_answer") {
    const auto& s = canonical_survey();
    CHECK(std::get<Choice>(validate_answer(s.item(4), Choice{Letter::A})).value == Letter::A);
    CHECK(std::get<Amount>(validate_answer(s.item(8), Amount{6000})).value == 6000.0);
    CHECK(kind_of([&] { validate_answer(s.item(2), Choice{Letter::A}); }) == ErrorKind::KindMismatch);
    CHECK(kind_of([&] { validate_answer(s.item(1), Amount{1}); }) == ErrorKind::KindMismatch);
    CHECK(kind_of([&] { validate_answer(s.item(5), Amount{-1}); }) == ErrorKind::Domain);
    CHECK(kind_of([&] { validate_answer(s.item(5), Amount{INFINITY}); }) == ErrorKind::Domain);
  }

  TEST_CASE("format_answer") {
    CHECK(format_answer(Choice{Letter::B}) == "B");
    CHECK(format_answer(Amount{150.37594}) == "150.37594");
    CHECK(format_answer(Amount{6000}) == "6000");
    CHECK(format_answer(Amount{0.1}) == "0.1");
    CHECK(format_answer(Amount{1e300}).size() == 301);
  }

  TEST_CASE("idempotence over the corpus") {
    for (const auto& c : corpus::cases()) {
      const ParseOutcome first = parse(c.kind, c.text);
      if (!first.ok()) continue;
      const ParseOutcome again = parse(c.kind, format_answer(*first.value));
      REQUIRE(again.ok());
      CHECK(*again.value == *first.value);
    }
  }

  TEST_CASE("fuzz: 100000 random UTF-8 inputs classify totally") {
    std::mt19937_64 rng(20240601);
    for (int i = 0; i < 100000; ++i) {
      const std::string text = random_utf8(rng);
      const ParseOutcome a = parse_amount(text);
      const ParseOutcome c = parse_choice(text);
      check_total(a);
      check_total(c);
      if (a.ok()) CHECK(*parse_amount(format_answer(*a.value)).value == *a.value);
      if (c.ok()) CHECK(*parse_choice(format_answer(*c.value)).value == *c.value);
    }
  }

  TEST_CASE("arbitrary bytes do not crash the parsers") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int i = 0; i < 20000; ++i) {
      std::string s(static_cast<std::size_t>(byte(rng) % 32), '\0');
      for (auto& ch : s) ch = static_cast<char>(byte(rng));
      check_total(parse_amount(s));
      check_total(parse_choice(s));
    }
  }
}
