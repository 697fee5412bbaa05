#pragma once

// Chemical formula parsing for flat element/coefficient sequences such as
// "Ca0.4Ba1.25La1.25Cu3O6.98". Grammar:
//
//   formula := token+
//   token   := SYMBOL NUMBER?
//   SYMBOL  := [A-Z][a-z]?
//   NUMBER  := [0-9]+ ('.' [0-9]+)?      (default 1)
//
// Parentheses, hydrate dots and charges are not part of the grammar.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "supertc/error.hpp"

namespace supertc {

inline constexpr int kMaxAtomicNumber = 118;

class Element {
 public:
  // Throws FormulaError(kUnknownElement) for numbers outside [1, 118].
  static Element from_atomic_number(int z);
  static std::optional<Element> from_symbol(std::string_view symbol);

  int atomic_number() const noexcept { return z_; }
  std::string_view symbol() const noexcept;

  friend bool operator==(Element, Element) = default;
  friend auto operator<=>(Element a, Element b) { return a.z_ <=> b.z_; }

 private:
  explicit constexpr Element(int z) : z_(z) {}
  int z_;
};

struct CompositionEntry {
  Element element;
  double amount;
};

// Element -> stoichiometric amount. Entries keep first-appearance order;
// repeated elements are merged by summation. Equality ignores order.
class Composition {
 public:
  Composition() = default;

  // Adds `amount` to `element`, appending a new entry if absent.
  void add(Element element, double amount);

  const std::vector<CompositionEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  std::optional<double> amount_of(Element element) const;
  double total_amount() const noexcept;

  friend bool operator==(const Composition& a, const Composition& b);

 private:
  std::vector<CompositionEntry> entries_;
};

// Throws FormulaError with a byte offset into `text` on failure.
Composition parse_formula(std::string_view text);

// Canonical rendering: elements ordered by atomic number, shortest
// round-trip decimal amounts, coefficient 1 omitted.
std::string format_composition(const Composition& composition);

}  // namespace supertc
