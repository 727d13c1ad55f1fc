#include "spop/frontend.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "spop/error.hpp"

namespace spop {

namespace {

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void only_fields(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw FormatError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw FormatError(where + ": unknown field '" + key + "'");
  }
}

int as_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw FormatError(where + ": expected an integer");
  return j.get<int>();
}

const Json& required(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw FormatError(where + ": missing field '" + std::string(key) + "'");
  return obj.at(key);
}

std::vector<std::vector<Polynomial>> constraint_lists(const Json& root, const char* key, int n, int m,
                                                      const std::vector<std::string>& names, const char* what) {
  std::vector<std::vector<Polynomial>> out(m);
  if (!root.contains(key)) return out;
  const auto& lists = root.at(key);
  if (!lists.is_array() || static_cast<int>(lists.size()) != m) {
    throw FormatError(std::string(key) + ": expected one list per block (m=" + std::to_string(m) + ")");
  }
  for (int i = 0; i < m; ++i) {
    if (!lists[i].is_array()) throw FormatError(std::string(key) + "[" + std::to_string(i) + "]: expected a list");
    for (std::size_t j = 0; j < lists[i].size(); ++j) {
      const auto where = std::string(what) + " " + std::to_string(j + 1) + " of block " + names[i];
      out[i].push_back(polynomial_from_json(lists[i][j], n, where));
    }
  }
  return out;
}

std::vector<double> flatten(const Eigen::MatrixXd& a) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(a.size()));
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) v.push_back(a(r, c));
  }
  return v;
}

Eigen::MatrixXd unflatten(const Json& j, int side, const std::string& where) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(side) * side) {
    throw FormatError(where + ": gram must hold side*side numbers");
  }
  Eigen::MatrixXd a(side, side);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const auto& v = j[static_cast<std::size_t>(r) * side + c];
      if (!v.is_number()) throw FormatError(where + ": non-numeric gram entry");
      a(r, c) = v.get<double>();
    }
  }
  return a;
}

Json block_to_json(const BlockCertificate& bc) {
  Json out;
  out["block"] = bc.block + 1;
  out["sos"] = Json::array();
  for (const auto& t : bc.sos) {
    out["sos"].push_back({{"label", t.label},
                          {"generator", polynomial_to_json(t.generator)},
                          {"vars", t.vars},
                          {"basis_degree", t.basis_degree},
                          {"side", t.gram.rows()},
                          {"gram", flatten(t.gram)}});
  }
  out["ideal"] = Json::array();
  for (const auto& t : bc.ideal) {
    out["ideal"].push_back({{"constraint", t.constraint + 1},
                            {"generator", polynomial_to_json(t.generator)},
                            {"multiplier", polynomial_to_json(t.multiplier)}});
  }
  return out;
}

BlockCertificate block_from_json(const Json& j, int n, const std::string& where) {
  BlockCertificate bc;
  bc.block = as_int(required(j, "block", where), where + ".block") - 1;
  for (const auto& s : required(j, "sos", where)) {
    GramTerm t;
    t.label = s.value("label", "");
    t.generator = polynomial_from_json(required(s, "generator", where), n, where + " generator");
    t.vars = required(s, "vars", where).get<std::vector<int>>();
    t.basis_degree = as_int(required(s, "basis_degree", where), where + ".basis_degree");
    const int side = as_int(required(s, "side", where), where + ".side");
    if (static_cast<std::size_t>(side) != binomial(t.vars.size() + t.basis_degree, t.basis_degree)) {
      throw FormatError(where + ": side does not match vars and basis_degree");
    }
    t.gram = unflatten(required(s, "gram", where), side, where + " " + t.label);
    bc.sos.push_back(std::move(t));
  }
  for (const auto& s : required(j, "ideal", where)) {
    IdealTerm t;
    t.constraint = as_int(required(s, "constraint", where), where + ".constraint") - 1;
    t.generator = polynomial_from_json(required(s, "generator", where), n, where + " ideal generator");
    t.multiplier = polynomial_from_json(required(s, "multiplier", where), n, where + " multiplier");
    bc.ideal.push_back(std::move(t));
  }
  return bc;
}

}  // namespace

Json polynomial_to_json(const Polynomial& p) {
  Json terms = Json::array();
  for (const auto& [e, c] : p.terms()) {
    Json ex = Json::array();
    for (const auto& [v, pw] : e.entries()) ex.push_back({v, pw});
    terms.push_back({{"c", c}, {"e", ex}});
  }
  return terms;
}

Polynomial polynomial_from_json(const Json& terms, int n, const std::string& where) {
  if (!terms.is_array()) throw FormatError(where + ": expected a list of terms");
  std::vector<std::pair<double, Exponent>> out;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto tw = where + ", term " + std::to_string(t + 1);
    const auto& term = terms[t];
    only_fields(term, {"c", "e"}, tw);
    const auto& c = required(term, "c", tw);
    if (!c.is_number()) throw FormatError(tw + ": non-numeric coefficient");
    std::vector<std::pair<int, int>> pairs;
    if (term.contains("e")) {
      const auto& e = term.at("e");
      if (!e.is_array()) throw FormatError(tw + ": 'e' must be a list of [var, pow] pairs");
      for (const auto& pr : e) {
        if (!pr.is_array() || pr.size() != 2) throw FormatError(tw + ": 'e' must be a list of [var, pow] pairs");
        const int v = as_int(pr[0], tw + " variable");
        const int pw = as_int(pr[1], tw + " power");
        if (v < 1 || v > n) throw FormatError(tw + ": variable " + std::to_string(v) + " outside [1, n]");
        if (pw < 0) throw FormatError(tw + ": negative power");
        pairs.emplace_back(v, pw);
      }
    }
    out.emplace_back(c.get<double>(), Exponent(std::move(pairs)));
  }
  return Polynomial(n, out);
}

SparsePOP parse_problem(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("syntax error at " + line_col(text, e.byte) + ": " + e.what());
  }
  only_fields(root, {"version", "n", "blocks", "objective", "eq", "ineq", "labels"}, "problem");
  if (as_int(required(root, "version", "problem"), "version") != 1) throw FormatError("version: only 1 is supported");
  const int n = as_int(required(root, "n", "problem"), "n");
  if (n < 1) throw FormatError("n: must be positive");
  const auto& blocks_json = required(root, "blocks", "problem");
  if (!blocks_json.is_array() || blocks_json.empty()) throw FormatError("blocks: expected a nonempty list");
  std::vector<std::vector<int>> blocks;
  for (std::size_t i = 0; i < blocks_json.size(); ++i) {
    const auto where = "blocks[" + std::to_string(i) + "]";
    if (!blocks_json[i].is_array() || blocks_json[i].empty()) throw FormatError(where + ": expected a nonempty list");
    std::vector<int> b;
    for (const auto& v : blocks_json[i]) b.push_back(as_int(v, where));
    if (std::set<int>(b.begin(), b.end()).size() != b.size()) throw FormatError(where + ": repeated variable");
    blocks.push_back(std::move(b));
  }
  SparsePOP pop;
  pop.pattern = SparsityPattern(n, blocks);
  const int m = pop.m();
  if (root.contains("labels")) {
    const auto& l = root.at("labels");
    if (!l.is_array() || static_cast<int>(l.size()) != m) throw FormatError("labels: expected one name per block");
    for (const auto& s : l) {
      if (!s.is_string()) throw FormatError("labels: expected strings");
      pop.labels.push_back(s.get<std::string>());
    }
  }
  std::vector<std::string> names;
  for (int i = 0; i < m; ++i) {
    std::string nm = pop.block_name(i) + " {";
    for (std::size_t j = 0; j < blocks[i].size(); ++j) nm += (j ? "," : "") + std::to_string(blocks[i][j]);
    names.push_back(nm + "}");
  }
  const auto& obj = required(root, "objective", "problem");
  if (!obj.is_array() || static_cast<int>(obj.size()) != m) {
    throw FormatError("objective: expected one term list per block (m=" + std::to_string(m) + ")");
  }
  for (int i = 0; i < m; ++i) pop.f.push_back(polynomial_from_json(obj[i], n, "objective of block " + names[i]));
  pop.h = constraint_lists(root, "eq", n, m, names, "equality");
  pop.g = constraint_lists(root, "ineq", n, m, names, "inequality");
  pop.validate();
  return pop;
}

SparsePOP load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_problem(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

Json problem_to_json(const SparsePOP& pop) {
  Json out;
  out["version"] = 1;
  out["n"] = pop.n();
  out["blocks"] = pop.pattern.blocks();
  out["objective"] = Json::array();
  out["eq"] = Json::array();
  out["ineq"] = Json::array();
  for (int i = 0; i < pop.m(); ++i) {
    out["objective"].push_back(polynomial_to_json(pop.f[i]));
    Json eq = Json::array(), ineq = Json::array();
    for (const auto& p : pop.h[i]) eq.push_back(polynomial_to_json(p));
    for (const auto& p : pop.g[i]) ineq.push_back(polynomial_to_json(p));
    out["eq"].push_back(eq);
    out["ineq"].push_back(ineq);
  }
  if (!pop.labels.empty()) out["labels"] = pop.labels;
  return out;
}

std::string emit_problem(const SparsePOP& pop) { return problem_to_json(pop).dump(2) + "\n"; }

Json certificate_to_json(const TightnessCertificate& cert) {
  Json out;
  out["kind"] = "tightness";
  out["model"] = to_string(cert.model);
  out["k"] = cert.k;
  out["gamma"] = cert.gamma;
  out["epsilon"] = cert.epsilon;
  out["identity_residual"] = cert.identity_residual;
  out["membership_residual"] = cert.membership_residual;
  out["p"] = Json::array();
  for (const auto& p : cert.p) out["p"].push_back(polynomial_to_json(p));
  out["blocks"] = Json::array();
  for (const auto& b : cert.blocks) out["blocks"].push_back(block_to_json(b));
  return out;
}

TightnessCertificate certificate_from_json(const Json& j, int n) {
  if (j.value("kind", "") != "tightness") throw FormatError("certificate: kind must be 'tightness'");
  TightnessCertificate cert;
  cert.model = parse_model(required(j, "model", "certificate").get<std::string>());
  cert.k = as_int(required(j, "k", "certificate"), "certificate.k");
  cert.gamma = required(j, "gamma", "certificate").get<double>();
  cert.epsilon = j.value("epsilon", 0.0);
  const auto& p = required(j, "p", "certificate");
  for (std::size_t i = 0; i < p.size(); ++i) cert.p.push_back(polynomial_from_json(p[i], n, "p_" + std::to_string(i + 1)));
  const auto& blocks = required(j, "blocks", "certificate");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    cert.blocks.push_back(block_from_json(blocks[i], n, "certificate block " + std::to_string(i + 1)));
  }
  return cert;
}

Json infeasibility_to_json(const InfeasibilityCertificate& cert) {
  Json out;
  out["kind"] = "infeasibility";
  out["k"] = cert.k;
  out["sum_residual"] = cert.sum_residual;
  out["membership_residual"] = cert.membership_residual;
  out["p"] = Json::array();
  for (const auto& p : cert.p) out["p"].push_back(polynomial_to_json(p));
  out["blocks"] = Json::array();
  for (const auto& b : cert.blocks) out["blocks"].push_back(block_to_json(b));
  return out;
}

InfeasibilityCertificate infeasibility_from_json(const Json& j, int n) {
  if (j.value("kind", "") != "infeasibility") throw FormatError("certificate: kind must be 'infeasibility'");
  InfeasibilityCertificate cert;
  cert.k = as_int(required(j, "k", "certificate"), "certificate.k");
  const auto& p = required(j, "p", "certificate");
  for (std::size_t i = 0; i < p.size(); ++i) cert.p.push_back(polynomial_from_json(p[i], n, "p_" + std::to_string(i + 1)));
  const auto& blocks = required(j, "blocks", "certificate");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    cert.blocks.push_back(block_from_json(blocks[i], n, "certificate block " + std::to_string(i + 1)));
  }
  return cert;
}

std::vector<std::vector<int>> wrap_blocks(int n, int w) {
  if (w < 1 || w > n) throw FormatError("block width w must satisfy 1 <= w <= n");
  std::vector<std::vector<int>> blocks;
  for (int i = 1; i <= n; ++i) {
    std::vector<int> b;
    for (int j = 0; j < w; ++j) b.push_back((i - 1 + j) % n + 1);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

InstanceRng::InstanceRng(std::uint64_t seed) : engine_(seed) {}

double InstanceRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double InstanceRng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

Eigen::MatrixXd draw(InstanceRng& rng, int w, bool gaussian) {
  Eigen::MatrixXd r(w, w);
  for (int a = 0; a < w; ++a) {
    for (int b = 0; b < w; ++b) r(a, b) = gaussian ? rng.normal() : rng.uniform();
  }
  return r;
}

// Σ_ab M_ab x_{vars[a]}^{p} x_{vars[b]}^{p}
Polynomial quadratic_form(int n, const std::vector<int>& vars, const Eigen::MatrixXd& m, int p) {
  std::vector<std::pair<double, Exponent>> terms;
  for (std::size_t a = 0; a < vars.size(); ++a) {
    for (std::size_t b = 0; b < vars.size(); ++b) {
      terms.emplace_back(m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)),
                         Exponent({{vars[a], p}, {vars[b], p}}));
    }
  }
  return Polynomial(n, terms);
}

Polynomial linear_form(int n, const std::vector<int>& vars, const Eigen::VectorXd& c) {
  std::vector<std::pair<double, Exponent>> terms;
  for (std::size_t a = 0; a < vars.size(); ++a) {
    terms.emplace_back(c[static_cast<Eigen::Index>(a)], Exponent::variable(vars[a]));
  }
  return Polynomial(n, terms);
}

SparsePOP generate(int n, int w, std::uint64_t seed, bool quartic) {
  if (w < 2 || w > n) throw FormatError("generator needs 2 <= w <= n");
  const auto blocks = wrap_blocks(n, w);
  InstanceRng rng(seed);
  SparsePOP pop;
  pop.pattern = SparsityPattern(n, blocks);
  pop.h.resize(n);
  pop.g.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& vars = blocks[i];
    Eigen::VectorXd b(w), c(w);
    for (int a = 0; a < w; ++a) b[a] = rng.normal();
    for (int a = 0; a < w; ++a) c[a] = rng.normal();
    const Eigen::MatrixXd rq = draw(rng, w, true);
    const Eigen::MatrixXd rb = draw(rng, w, true);
    Polynomial f = quadratic_form(n, vars, rq.transpose() * rq, 1) + linear_form(n, vars, b);
    Polynomial g = Polynomial::constant(n, 1.0) - linear_form(n, vars, c) -
                   quadratic_form(n, vars, rb.transpose() * rb, 1);
    if (quartic) {
      const Eigen::MatrixXd rd = draw(rng, w, false);
      const Eigen::MatrixXd rh = draw(rng, w, false);
      f = f + quadratic_form(n, vars, rd.transpose() * rd, 2);
      g = g - quadratic_form(n, vars, rh.transpose() * rh, 2);
    }
    pop.f.push_back(std::move(f));
    pop.g[i].push_back(std::move(g));
  }
  pop.validate();
  return pop;
}

}  // namespace

SparsePOP gen_qcqp(int n, int w, std::uint64_t seed) { return generate(n, w, seed, false); }

SparsePOP gen_quartic(int n, int w, std::uint64_t seed) { return generate(n, w, seed, true); }

}  // namespace spop
