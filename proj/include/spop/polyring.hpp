#pragma once

// Sparse multivariate polynomials over global (1-based) variable indices.

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace spop {

/// Monomial power stored sparsely as sorted (variable, power) pairs with power > 0.
class Exponent {
 public:
  Exponent() = default;

  /// Pairs may come in any order; repeated variables are summed and zero powers dropped.
  /// Throws FormatError on a variable index < 1 or a negative power.
  explicit Exponent(std::vector<std::pair<int, int>> entries);

  static Exponent variable(int var, int power = 1);

  const std::vector<std::pair<int, int>>& entries() const { return entries_; }
  int degree() const { return degree_; }
  bool is_zero() const { return entries_.empty(); }
  int power(int var) const;
  int max_variable() const { return entries_.empty() ? 0 : entries_.back().first; }

  /// True iff every variable with a positive power is listed in `block` (sorted).
  bool supported_in(std::span<const int> block) const;

  Exponent operator+(const Exponent& other) const;

  bool operator==(const Exponent& other) const = default;

  std::string to_string() const;

 private:
  std::vector<std::pair<int, int>> entries_;
  int degree_ = 0;
};

/// Graded lexicographic order: lower total degree first; within a degree the
/// exponent with the larger power of the lowest-indexed variable comes first,
/// so [x1,x2]_2 = (1, x1, x2, x1^2, x1 x2, x2^2).
bool grlex_less(const Exponent& a, const Exponent& b);

struct GrlexLess {
  bool operator()(const Exponent& a, const Exponent& b) const { return grlex_less(a, b); }
};

struct ExponentHash {
  std::size_t operator()(const Exponent& e) const noexcept;
};

inline constexpr double kArithmeticDropTol = 1e-14;

class Polynomial {
 public:
  using TermMap = std::map<Exponent, double, GrlexLess>;

  Polynomial() = default;
  explicit Polynomial(int n) : n_(n) {}

  /// Terms are taken verbatim (duplicates summed, exact zeros dropped).
  /// Throws FormatError when a term uses a variable outside [1, n].
  Polynomial(int n, const std::vector<std::pair<double, Exponent>>& terms);

  static Polynomial constant(int n, double c);
  static Polynomial variable(int n, int var);

  int n() const { return n_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// Max total degree over stored terms; 0 for the zero polynomial.
  int degree() const;
  double coefficient(const Exponent& e) const;
  double max_abs_coefficient() const;
  std::vector<int> variables() const;

  double eval(std::span<const double> x) const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator-() const { return scale(-1.0); }
  Polynomial scale(double s) const;
  Polynomial derivative(int var) const;

  /// Same terms, ambient dimension n (must cover every used variable).
  Polynomial with_ambient(int n) const;

  std::string to_string() const;

 private:
  void drop_small(double tol);

  int n_ = 0;
  TermMap terms_;
};

/// True iff every term of p is supported inside the sorted `block`.
bool support_check(const Polynomial& p, std::span<const int> block);

/// The monomial vector [x_block]_d in graded lexicographic order.
class MonomialBasis {
 public:
  MonomialBasis() = default;
  MonomialBasis(std::vector<int> block, int degree);

  const std::vector<int>& block() const { return block_; }
  int degree() const { return degree_; }
  const std::vector<Exponent>& exponents() const { return exponents_; }
  std::size_t size() const { return exponents_.size(); }
  const Exponent& operator[](std::size_t i) const { return exponents_[i]; }

  std::optional<std::size_t> position(const Exponent& e) const;

  /// Values of each monomial at the block-local point u (u[j] is x_{block[j]}).
  std::vector<double> evaluate_local(std::span<const double> u) const;

 private:
  std::vector<int> block_;
  int degree_ = 0;
  std::vector<Exponent> exponents_;
  std::unordered_map<Exponent, std::size_t, ExponentHash> lookup_;
};

/// Throws FormatError when block is empty, unsorted, has duplicates or indices < 1,
/// or when d < 0.
MonomialBasis monomial_basis(const std::vector<int>& block, int d);

std::size_t binomial(std::size_t n, std::size_t k);

/// Throws FormatError unless the block is nonempty, strictly increasing and 1-based.
void validate_block(std::span<const int> block);

/// x^alpha at a global point x (x[v-1] is variable v).
double monomial_value(const Exponent& e, std::span<const double> x);

}  // namespace spop
