#include "supertc/formula.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <system_error>

namespace supertc {
namespace {

constexpr std::array<std::string_view, kMaxAtomicNumber> kSymbols = {
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb",
    "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm",
    "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds",
    "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",};

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

Element Element::from_atomic_number(int z) {
  if (z < 1 || z > kMaxAtomicNumber) {
    throw FormulaError(ErrorCode::kUnknownElement,
                       "atomic number out of range: " + std::to_string(z), 0);
  }
  return Element(z);
}

std::optional<Element> Element::from_symbol(std::string_view symbol) {
  auto it = std::find(kSymbols.begin(), kSymbols.end(), symbol);
  if (it == kSymbols.end()) return std::nullopt;
  return Element(static_cast<int>(it - kSymbols.begin()) + 1);
}

std::string_view Element::symbol() const noexcept { return kSymbols[z_ - 1]; }

void Composition::add(Element element, double amount) {
  if (!(amount > 0.0) || !std::isfinite(amount)) {
    throw FormulaError(ErrorCode::kZeroAmount, "amount must be positive and finite", 0,
                       std::string(element.symbol()));
  }
  for (auto& entry : entries_) {
    if (entry.element == element) {
      entry.amount += amount;
      return;
    }
  }
  entries_.push_back({element, amount});
}

std::optional<double> Composition::amount_of(Element element) const {
  for (const auto& entry : entries_) {
    if (entry.element == element) return entry.amount;
  }
  return std::nullopt;
}

double Composition::total_amount() const noexcept {
  return std::accumulate(entries_.begin(), entries_.end(), 0.0,
                         [](double acc, const CompositionEntry& e) { return acc + e.amount; });
}

bool operator==(const Composition& a, const Composition& b) {
  if (a.size() != b.size()) return false;
  for (const auto& entry : a.entries_) {
    auto other = b.amount_of(entry.element);
    if (!other || *other != entry.amount) return false;
  }
  return true;
}

Composition parse_formula(std::string_view text) {
  if (text.empty()) {
    throw FormulaError(ErrorCode::kEmptyFormula, "empty formula", 0);
  }

  Composition composition;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t symbol_start = pos;
    const char head = text[pos];
    if (is_digit(head) || head == '.') {
      throw FormulaError(ErrorCode::kMalformedNumber,
                         "number without a preceding element symbol", pos);
    }
    if (!is_upper(head)) {
      throw FormulaError(ErrorCode::kUnknownElement,
                         std::string("unexpected character '") + head + "'", pos,
                         std::string(1, head));
    }
    ++pos;
    if (pos < text.size() && is_lower(text[pos])) ++pos;
    const std::string_view symbol = text.substr(symbol_start, pos - symbol_start);
    const auto element = Element::from_symbol(symbol);
    if (!element) {
      throw FormulaError(ErrorCode::kUnknownElement,
                         "unknown element symbol '" + std::string(symbol) + "'",
                         symbol_start, std::string(symbol));
    }

    double amount = 1.0;
    if (pos < text.size() && (is_digit(text[pos]) || text[pos] == '.')) {
      const std::size_t number_start = pos;
      if (text[pos] == '.') {
        throw FormulaError(ErrorCode::kMalformedNumber, "number must start with a digit", pos);
      }
      while (pos < text.size() && is_digit(text[pos])) ++pos;
      if (pos < text.size() && text[pos] == '.') {
        ++pos;
        if (pos >= text.size() || !is_digit(text[pos])) {
          throw FormulaError(ErrorCode::kMalformedNumber,
                             "expected digits after decimal point",
                             std::min(pos, text.size() - 1));
        }
        while (pos < text.size() && is_digit(text[pos])) ++pos;
      }
      if (pos < text.size() && text[pos] == '.') {
        throw FormulaError(ErrorCode::kMalformedNumber, "second decimal point in number", pos);
      }
      const char* first = text.data() + number_start;
      const char* last = text.data() + pos;
      auto [end, ec] = std::from_chars(first, last, amount);
      if (ec != std::errc() || end != last) {
        throw FormulaError(ErrorCode::kMalformedNumber, "unparseable number", number_start);
      }
      if (amount == 0.0) {
        throw FormulaError(ErrorCode::kZeroAmount,
                           "zero amount for element '" + std::string(symbol) + "'",
                           number_start, std::string(symbol));
      }
    }
    composition.add(*element, amount);
  }
  return composition;
}

std::string format_composition(const Composition& composition) {
  std::vector<CompositionEntry> entries = composition.entries();
  std::sort(entries.begin(), entries.end(),
            [](const CompositionEntry& a, const CompositionEntry& b) { return a.element < b.element; });

  std::string out;
  for (const auto& entry : entries) {
    out += entry.element.symbol();
    if (entry.amount == 1.0) continue;
    std::array<char, 512> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), entry.amount,
                                   std::chars_format::fixed);
    out.append(buf.data(), end);
  }
  return out;
}

}  // namespace supertc
