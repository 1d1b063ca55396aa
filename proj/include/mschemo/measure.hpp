#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mschemo {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kCriticalMass = 8.0 * kPi;

class MeasureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One atom of the species measure: sensitivity alpha in [-1,1] with
/// probability weight.
struct Atom {
  double alpha = 0.0;
  double weight = 0.0;
};

/// Atomic probability measure over the species index alpha in [-1,1].
///
/// Atoms are stored sorted by alpha with weights summing to one. Instances are
/// immutable once built by make_measure().
class SpeciesMeasure {
 public:
  [[nodiscard]] std::size_t size() const { return atoms_.size(); }
  [[nodiscard]] const Atom& operator[](std::size_t j) const { return atoms_[j]; }
  [[nodiscard]] std::span<const Atom> atoms() const { return atoms_; }
  [[nodiscard]] double alpha(std::size_t j) const { return atoms_[j].alpha; }
  [[nodiscard]] double weight(std::size_t j) const { return atoms_[j].weight; }

  /// Exact support query: true iff alpha is an atom.
  [[nodiscard]] bool in_support(double alpha) const;
  /// P([lo, hi]).
  [[nodiscard]] double mass_of(double lo, double hi) const;
  [[nodiscard]] double max_abs_alpha() const;

 private:
  friend SpeciesMeasure make_measure(std::span<const Atom> atoms);
  std::vector<Atom> atoms_;
};

/// Validates, normalizes the weights to one and sorts by alpha.
/// Throws MeasureError on an empty list, alpha outside [-1,1], a nonpositive
/// weight or a repeated alpha.
SpeciesMeasure make_measure(std::span<const Atom> atoms);
inline SpeciesMeasure make_measure(std::initializer_list<Atom> atoms) {
  return make_measure(std::span<const Atom>(atoms.begin(), atoms.size()));
}

/// Sum over atoms of w_j g(alpha_j).
double integrate_alpha(const SpeciesMeasure& measure,
                       const std::function<double(double)>& g);

/// Critical total mass under the average constraint: 8*pi when an atom sits at
/// alpha = 1 or alpha = -1, std::nullopt otherwise (threshold not established).
std::optional<double> critical_mass_average(const SpeciesMeasure& measure);

/// Critical mass under the individual constraint,
///   min over nonempty same-sign atom subsets K of 8 pi P(K) / (sum_K w alpha)^2.
/// Alpha = 0 atoms belong to the nonnegative side; subsets whose alpha-sum
/// vanishes are skipped. Enumeration is exhaustive (at most 30 atoms per side).
double critical_mass_individual(const SpeciesMeasure& measure);

}  // namespace mschemo
