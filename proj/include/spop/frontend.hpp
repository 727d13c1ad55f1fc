#pragma once

// Problem files (.spop.json), reports, certificate files, the random instance
// generators and the solve / compare pipelines behind the CLI.

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spop/certify.hpp"
#include "spop/extract.hpp"
#include "spop/relax.hpp"
#include "spop/sdp.hpp"

namespace spop {

using Json = nlohmann::ordered_json;

/// Problem file grammar (JSON):
///   { "version": 1, "n": N, "blocks": [[1-based vars]...],
///     "objective": [terms per block], "eq": [[terms...] per block],
///     "ineq": [[terms...] per block], "labels": [names] }
/// terms = [{"c": number, "e": [[var, pow], ...]}, ...]. eq, ineq and labels
/// may be omitted. Throws FormatError with line/column or a JSON path.
SparsePOP parse_problem(const std::string& text);
SparsePOP load_problem(const std::string& path);

Json problem_to_json(const SparsePOP& pop);
std::string emit_problem(const SparsePOP& pop);

Json polynomial_to_json(const Polynomial& p);
Polynomial polynomial_from_json(const Json& terms, int n, const std::string& where);

Json certificate_to_json(const TightnessCertificate& cert);
TightnessCertificate certificate_from_json(const Json& j, int n);
Json infeasibility_to_json(const InfeasibilityCertificate& cert);
InfeasibilityCertificate infeasibility_from_json(const Json& j, int n);

/// Wrap-around blocks Δ_i = {i, …, i+w−1} (mod n), in listed order.
std::vector<std::vector<int>> wrap_blocks(int n, int w);

/// mt19937_64 stream shared by the generators: uniform = (bits >> 11)·2⁻⁵³,
/// normal = √(−2 ln(1 − u1)) cos(2π u2) (one normal per two uniforms).
class InstanceRng {
 public:
  explicit InstanceRng(std::uint64_t seed);
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// min Σ x_Δiᵀ Q_i x_Δi + b_iᵀ x_Δi  s.t. 1 − x_Δiᵀ B_i x_Δi − c_iᵀ x_Δi ≥ 0.
/// Per block the stream yields b_i, c_i, then R_Q and R_B row-major (w×w),
/// Q_i = R_Qᵀ R_Q, B_i = R_Bᵀ R_B.
SparsePOP gen_qcqp(int n, int w, std::uint64_t seed);

/// Adds (x^[2])ᵀ D_i x^[2] to f_i and −(x^[2])ᵀ H_i x^[2] to g_i, with D_i, H_i
/// from uniform [0,1] factors drawn after R_Q and R_B.
SparsePOP gen_quartic(int n, int w, std::uint64_t seed);

struct SolveConfig {
  int k = 0;  // 0: use k0
  Model model = Model::SparsePutinar;
  double tol = 1e-8;
  bool extract = false;
  bool certify = false;
  double epsilon = 0.0;
  bool force = false;
  int psd_cap = 2000;
  double rank_tol = 1e-6;
  double value_tol = 1e-5;  // certify_by_value and stitching tolerance
  std::string source;       // file name or generator spec, echoed into the report
  Json instance;            // generator metadata, if any
};

enum class Outcome { TightCertified, BoundOnly, InfeasibilityCertified, Error };

std::string to_string(Outcome o);
int exit_code(Outcome o);

struct CandidatePoint {
  std::vector<double> x;
  ValueCheck check;
};

struct SolveResult {
  Outcome outcome = Outcome::Error;
  Json report;
  std::optional<RelaxationSolve> relaxation;
  std::optional<FlatReport> flat;
  std::vector<AtomicMeasure> measures;
  std::optional<StitchResult> stitched;
  std::string candidate_route;  // "stitch", "consistent-combination" or empty
  std::vector<CandidatePoint> candidates;
  std::optional<TightnessCertificate> certificate;
  std::optional<VerifyReport> verification;
  std::optional<InfeasibilityCertificate> infeasibility;
};

/// assemble → solve → flat truncation → extraction → stitching (or the
/// consistent-combination fallback) → value check → certificate.
SolveResult run_solve(const SparsePOP& pop, const SolveConfig& config);

Json rip_to_json(const RipReport& rip);

struct CompareSide {
  std::string model;
  bool refused = false;  // "oom-analog": over the dimension cap
  std::string reason;
  SizeEstimate sizes;
  std::optional<double> bound;
  std::string status;
  double seconds = 0.0;
};

struct CompareRow {
  CompareSide sparse;
  CompareSide dense;
  /// "agree", "disagree", "not-predicted" or "n/a".
  std::string agreement = "n/a";
  double relative_difference = 0.0;
};

CompareRow run_compare(const SparsePOP& pop, int k, const SolverOptions& opts, bool predict_equal,
                       double agree_tol = 1e-5);

Json compare_to_json(const CompareRow& row);

}  // namespace spop
