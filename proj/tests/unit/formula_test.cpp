#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <string>

#include "supertc/error.hpp"
#include "supertc/formula.hpp"

namespace supertc {
namespace {

Element el(const char* symbol) { return *Element::from_symbol(symbol); }

TEST(ElementTest, SymbolAtomicNumberBijection) {
  for (int z = 1; z <= kMaxAtomicNumber; ++z) {
    const Element e = Element::from_atomic_number(z);
    const auto back = Element::from_symbol(e.symbol());
    ASSERT_TRUE(back.has_value()) << z;
    EXPECT_EQ(back->atomic_number(), z);
  }
  EXPECT_EQ(el("H").atomic_number(), 1);
  EXPECT_EQ(el("Si").atomic_number(), 14);
  EXPECT_EQ(el("Mo").atomic_number(), 42);
  EXPECT_EQ(el("Re").atomic_number(), 75);
  EXPECT_EQ(el("Og").atomic_number(), 118);
  EXPECT_FALSE(Element::from_symbol("Xx").has_value());
  EXPECT_THROW(Element::from_atomic_number(0), FormulaError);
  EXPECT_THROW(Element::from_atomic_number(119), FormulaError);
}

TEST(ParseFormulaTest, MixedAmounts) {
  const Composition c = parse_formula("Ca0.4Ba1.25La1.25Cu3O6.98");
  ASSERT_EQ(c.size(), 5u);
  EXPECT_EQ(*c.amount_of(el("Ca")), 0.4);
  EXPECT_EQ(*c.amount_of(el("Ba")), 1.25);
  EXPECT_EQ(*c.amount_of(el("La")), 1.25);
  EXPECT_EQ(*c.amount_of(el("Cu")), 3.0);
  EXPECT_EQ(*c.amount_of(el("O")), 6.98);
  // first-appearance order is kept
  EXPECT_EQ(c.entries()[0].element, el("Ca"));
  EXPECT_EQ(c.entries()[4].element, el("O"));
}

TEST(ParseFormulaTest, DefaultCoefficientIsOne) {
  const Composition c = parse_formula("Mo4Re2Si");
  EXPECT_EQ(*c.amount_of(el("Mo")), 4.0);
  EXPECT_EQ(*c.amount_of(el("Re")), 2.0);
  EXPECT_EQ(*c.amount_of(el("Si")), 1.0);

  const Composition h = parse_formula("H");
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(*h.amount_of(el("H")), 1.0);
}

TEST(ParseFormulaTest, RepeatedSymbolsAreSummed) {
  const Composition c = parse_formula("O2O");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(*c.amount_of(el("O")), 3.0);
}

TEST(ParseFormulaTest, KeepsFullInputPrecision) {
  EXPECT_EQ(*parse_formula("Cu0.1234").amount_of(el("Cu")), 0.1234);
  EXPECT_EQ(*parse_formula("Cu1234.5").amount_of(el("Cu")), 1234.5);
}

struct BadFormula {
  const char* text;
  ErrorCode code;
  std::size_t offset;
};

class ParseErrorTest : public ::testing::TestWithParam<BadFormula> {};

TEST_P(ParseErrorTest, ReportsCodeAndOffset) {
  const BadFormula& bad = GetParam();
  try {
    parse_formula(bad.text);
    FAIL() << "expected failure for '" << bad.text << "'";
  } catch (const FormulaError& e) {
    EXPECT_EQ(e.code(), bad.code) << bad.text << ": " << e.what();
    EXPECT_EQ(e.offset(), bad.offset) << bad.text;
  }
}

INSTANTIATE_TEST_SUITE_P(
    Formulas, ParseErrorTest,
    ::testing::Values(BadFormula{"Xx2", ErrorCode::kUnknownElement, 0},
                      BadFormula{"H2Qq3", ErrorCode::kUnknownElement, 2},
                      BadFormula{"", ErrorCode::kEmptyFormula, 0},
                      BadFormula{"2H", ErrorCode::kMalformedNumber, 0},
                      BadFormula{"H1.", ErrorCode::kMalformedNumber, 2},
                      BadFormula{"H1.2.3", ErrorCode::kMalformedNumber, 4},
                      BadFormula{"H.5", ErrorCode::kMalformedNumber, 1},
                      BadFormula{"O0", ErrorCode::kZeroAmount, 1},
                      BadFormula{"CuO0.000", ErrorCode::kZeroAmount, 3},
                      BadFormula{"H2 O", ErrorCode::kUnknownElement, 2},
                      BadFormula{"h2o", ErrorCode::kUnknownElement, 0},
                      BadFormula{"Ca(OH)2", ErrorCode::kUnknownElement, 2}));

TEST(ParseFormulaTest, ZeroAmountNamesTheSymbol) {
  try {
    parse_formula("Cu1O0");
    FAIL();
  } catch (const FormulaError& e) {
    EXPECT_EQ(e.symbol(), "O");
  }
}

TEST(FormatCompositionTest, OrdersByAtomicNumber) {
  EXPECT_EQ(format_composition(parse_formula("Mo4Re2Si")), "SiMo4Re2");
  EXPECT_EQ(format_composition(parse_formula("H")), "H");
  EXPECT_EQ(format_composition(parse_formula("Ca0.4Ba1.25La1.25Cu3O6.98")), "O6.98Ca0.4Cu3Ba1.25La1.25");
}

TEST(FormatCompositionTest, MixedAmountsRoundTrip) {
  const Composition c = parse_formula("Ca0.4Ba1.25La1.25Cu3O6.98");
  EXPECT_EQ(parse_formula(format_composition(c)), c);
}

TEST(CompositionTest, EqualityIgnoresOrder) {
  EXPECT_EQ(parse_formula("Mo4Re2Si"), parse_formula("SiRe2Mo4"));
  EXPECT_NE(parse_formula("Mo4Re2Si"), parse_formula("Mo4Re2Si2"));
  EXPECT_NE(parse_formula("Mo4Re2"), parse_formula("Mo4Re2Si"));
}

TEST(CompositionTest, AddRejectsNonPositiveAmounts) {
  Composition c;
  EXPECT_THROW(c.add(el("H"), 0.0), FormulaError);
  EXPECT_THROW(c.add(el("H"), -1.0), FormulaError);
  EXPECT_THROW(c.add(el("H"), std::nan("")), FormulaError);
}

// Property: for random compositions, parse(format(c)) == c.
TEST(FormatCompositionProperty, RoundTripOnRandomCompositions) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> z_dist(1, kMaxAtomicNumber);
  std::uniform_int_distribution<int> count_dist(1, 6);
  std::uniform_real_distribution<double> amount_dist(1e-4, 50.0);
  for (int trial = 0; trial < 2000; ++trial) {
    Composition c;
    const int k = count_dist(rng);
    for (int i = 0; i < k; ++i) {
      double amount = amount_dist(rng);
      if (trial % 3 == 0) amount = std::round(amount * 100) / 100 + 0.01;  // short decimals
      if (trial % 7 == 0) amount = 1.0;
      c.add(Element::from_atomic_number(z_dist(rng)), amount);
    }
    const std::string text = format_composition(c);
    ASSERT_EQ(parse_formula(text), c) << text;
  }
}

// Property: every error offset lies inside the input.
TEST(ParseFormulaProperty, ErrorOffsetsPointInsideInput) {
  std::mt19937_64 rng(5);
  const std::string alphabet = "HCOXxqNaClMgB0123456789.() eE";
  std::uniform_int_distribution<std::size_t> len_dist(1, 12);
  std::uniform_int_distribution<std::size_t> ch_dist(0, alphabet.size() - 1);
  int failures = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    std::string text;
    const std::size_t len = len_dist(rng);
    for (std::size_t i = 0; i < len; ++i) text += alphabet[ch_dist(rng)];
    try {
      const Composition c = parse_formula(text);
      for (const auto& e : c.entries()) ASSERT_GT(e.amount, 0.0) << text;
    } catch (const FormulaError& e) {
      ++failures;
      ASSERT_LT(e.offset(), text.size()) << text;
    }
  }
  EXPECT_GT(failures, 0);
}

TEST(ParseFormulaTest, AcceptsBundledCorpus) {
  std::ifstream in(SUPERTC_TEST_DATA_DIR "/formula_corpus.txt");
  ASSERT_TRUE(in);
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++count;
    Composition c;
    ASSERT_NO_THROW(c = parse_formula(line)) << line;
    EXPECT_EQ(parse_formula(format_composition(c)), c) << line;
  }
  EXPECT_EQ(count, 200);
}

}  // namespace
}  // namespace supertc
