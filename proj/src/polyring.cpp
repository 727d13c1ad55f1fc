#include "spop/polyring.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "spop/error.hpp"

namespace spop {

Exponent::Exponent(std::vector<std::pair<int, int>> entries) {
  std::sort(entries.begin(), entries.end());
  for (const auto& [var, pow] : entries) {
    if (var < 1) throw FormatError("exponent uses variable index " + std::to_string(var));
    if (pow < 0) throw FormatError("negative power for x" + std::to_string(var));
    if (pow == 0) continue;
    if (!entries_.empty() && entries_.back().first == var) {
      entries_.back().second += pow;
    } else {
      entries_.emplace_back(var, pow);
    }
    degree_ += pow;
  }
}

Exponent Exponent::variable(int var, int power) { return Exponent({{var, power}}); }

int Exponent::power(int var) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), std::make_pair(var, 0));
  return (it != entries_.end() && it->first == var) ? it->second : 0;
}

bool Exponent::supported_in(std::span<const int> block) const {
  return std::all_of(entries_.begin(), entries_.end(), [&](const auto& e) {
    return std::binary_search(block.begin(), block.end(), e.first);
  });
}

Exponent Exponent::operator+(const Exponent& other) const {
  Exponent out;
  out.entries_.reserve(entries_.size() + other.entries_.size());
  std::size_t i = 0, j = 0;
  while (i < entries_.size() || j < other.entries_.size()) {
    if (j == other.entries_.size() || (i < entries_.size() && entries_[i].first < other.entries_[j].first)) {
      out.entries_.push_back(entries_[i++]);
    } else if (i == entries_.size() || other.entries_[j].first < entries_[i].first) {
      out.entries_.push_back(other.entries_[j++]);
    } else {
      out.entries_.emplace_back(entries_[i].first, entries_[i].second + other.entries_[j].second);
      ++i;
      ++j;
    }
  }
  out.degree_ = degree_ + other.degree_;
  return out;
}

std::string Exponent::to_string() const {
  if (entries_.empty()) return "1";
  std::ostringstream os;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) os << '*';
    os << 'x' << entries_[i].first;
    if (entries_[i].second > 1) os << '^' << entries_[i].second;
  }
  return os.str();
}

bool grlex_less(const Exponent& a, const Exponent& b) {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  std::size_t i = 0, j = 0;
  while (i < ea.size() && j < eb.size()) {
    if (ea[i].first != eb[j].first) {
      // a has a positive power of a lower variable where b has none.
      return ea[i].first < eb[j].first;
    }
    if (ea[i].second != eb[j].second) return ea[i].second > eb[j].second;
    ++i;
    ++j;
  }
  // Equal degree and one is a prefix of the other means both are exhausted.
  return false;
}

std::size_t ExponentHash::operator()(const Exponent& e) const noexcept {
  std::size_t h = 0x9e3779b97f4a7c15ULL;
  for (const auto& [v, p] : e.entries()) {
    h ^= std::hash<long long>{}((static_cast<long long>(v) << 20) ^ p) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

double monomial_value(const Exponent& e, std::span<const double> x) {
  double v = 1.0;
  for (const auto& [var, pow] : e.entries()) {
    const double xv = x[var - 1];
    for (int p = 0; p < pow; ++p) v *= xv;
  }
  return v;
}

// ---------------------------------------------------------------------------

Polynomial::Polynomial(int n, const std::vector<std::pair<double, Exponent>>& terms) : n_(n) {
  for (const auto& [c, e] : terms) {
    if (e.max_variable() > n) {
      throw FormatError("term " + e.to_string() + " uses a variable beyond n=" + std::to_string(n));
    }
    terms_[e] += c;
  }
  drop_small(0.0);
}

Polynomial Polynomial::constant(int n, double c) {
  return Polynomial(n, {{c, Exponent()}});
}

Polynomial Polynomial::variable(int n, int var) {
  return Polynomial(n, {{1.0, Exponent::variable(var)}});
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, e.degree());
  return d;
}

double Polynomial::coefficient(const Exponent& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::max_abs_coefficient() const {
  double m = 0.0;
  for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

std::vector<int> Polynomial::variables() const {
  std::vector<int> vars;
  for (const auto& [e, c] : terms_) {
    for (const auto& [v, p] : e.entries()) vars.push_back(v);
  }
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

double Polynomial::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) {
    throw DimensionError("eval: point has " + std::to_string(x.size()) + " entries, polynomial has n=" +
                         std::to_string(n_));
  }
  double s = 0.0;
  for (const auto& [e, c] : terms_) s += c * monomial_value(e, x);
  return s;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial out(std::max(n_, other.n_));
  out.terms_ = terms_;
  for (const auto& [e, c] : other.terms_) out.terms_[e] += c;
  out.drop_small(kArithmeticDropTol);
  return out;
}

Polynomial Polynomial::operator-(const Polynomial& other) const { return *this + other.scale(-1.0); }

Polynomial Polynomial::operator*(const Polynomial& other) const {
  Polynomial out(std::max(n_, other.n_));
  for (const auto& [ea, ca] : terms_) {
    for (const auto& [eb, cb] : other.terms_) out.terms_[ea + eb] += ca * cb;
  }
  out.drop_small(kArithmeticDropTol);
  return out;
}

Polynomial Polynomial::scale(double s) const {
  Polynomial out(n_);
  if (s == 0.0) return out;
  for (const auto& [e, c] : terms_) out.terms_.emplace_hint(out.terms_.end(), e, c * s);
  out.drop_small(kArithmeticDropTol);
  return out;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial out(n_);
  for (const auto& [e, c] : terms_) {
    const int p = e.power(var);
    if (p == 0) continue;
    std::vector<std::pair<int, int>> entries = e.entries();
    for (auto& [v, q] : entries) {
      if (v == var) q -= 1;
    }
    out.terms_[Exponent(std::move(entries))] += c * p;
  }
  out.drop_small(kArithmeticDropTol);
  return out;
}

Polynomial Polynomial::with_ambient(int n) const {
  for (const auto& [e, c] : terms_) {
    if (e.max_variable() > n) throw DimensionError("with_ambient: term " + e.to_string() + " beyond n");
  }
  Polynomial out(n);
  out.terms_ = terms_;
  return out;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(6);
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << '-';
    first = false;
    const double a = std::abs(c);
    if (e.is_zero()) {
      os << a;
    } else {
      if (a != 1.0) os << a << '*';
      os << e.to_string();
    }
  }
  return os.str();
}

void Polynomial::drop_small(double tol) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) <= tol) it = terms_.erase(it);
    else ++it;
  }
}

bool support_check(const Polynomial& p, std::span<const int> block) {
  return std::all_of(p.terms().begin(), p.terms().end(),
                     [&](const auto& t) { return t.first.supported_in(block); });
}

// ---------------------------------------------------------------------------

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void validate_block(std::span<const int> block) {
  if (block.empty()) throw FormatError("empty variable block");
  for (std::size_t i = 0; i < block.size(); ++i) {
    if (block[i] < 1) throw FormatError("variable index " + std::to_string(block[i]) + " is not 1-based");
    if (i > 0 && block[i] <= block[i - 1]) {
      throw FormatError(block[i] == block[i - 1] ? "duplicate variable index " + std::to_string(block[i])
                                                 : "variable block is not sorted");
    }
  }
}

namespace {

// All exponents of exact degree d over block[pos..], highest power of the
// first variable first.
void append_degree(const std::vector<int>& block, std::size_t pos, int d, std::vector<std::pair<int, int>>& cur,
                   std::vector<Exponent>& out) {
  if (pos + 1 == block.size()) {
    cur.emplace_back(block[pos], d);
    out.emplace_back(cur);
    cur.pop_back();
    return;
  }
  for (int p = d; p >= 0; --p) {
    cur.emplace_back(block[pos], p);
    append_degree(block, pos + 1, d - p, cur, out);
    cur.pop_back();
  }
}

}  // namespace

MonomialBasis::MonomialBasis(std::vector<int> block, int degree) : block_(std::move(block)), degree_(degree) {
  validate_block(block_);
  if (degree_ < 0) throw FormatError("negative basis degree");
  exponents_.reserve(binomial(block_.size() + degree_, degree_));
  std::vector<std::pair<int, int>> cur;
  for (int d = 0; d <= degree_; ++d) append_degree(block_, 0, d, cur, exponents_);
  lookup_.reserve(exponents_.size());
  for (std::size_t i = 0; i < exponents_.size(); ++i) lookup_.emplace(exponents_[i], i);
}

std::optional<std::size_t> MonomialBasis::position(const Exponent& e) const {
  auto it = lookup_.find(e);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> MonomialBasis::evaluate_local(std::span<const double> u) const {
  if (u.size() != block_.size()) throw DimensionError("evaluate_local: point size does not match block");
  std::vector<double> out;
  out.reserve(exponents_.size());
  for (const auto& e : exponents_) {
    double v = 1.0;
    for (const auto& [var, pow] : e.entries()) {
      const auto j = std::lower_bound(block_.begin(), block_.end(), var) - block_.begin();
      for (int p = 0; p < pow; ++p) v *= u[j];
    }
    out.push_back(v);
  }
  return out;
}

MonomialBasis monomial_basis(const std::vector<int>& block, int d) { return MonomialBasis(block, d); }

}  // namespace spop
