// spop: solve sparse polynomial optimization problems with the sparse
// Moment-SOS hierarchy.
//
// Exit codes for `solve`: 0 tight-certified, 1 error, 2 bound-only,
// 3 infeasibility-certified. `verify` returns 0 for a valid certificate and 2
// otherwise.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spop/error.hpp"
#include "spop/frontend.hpp"

namespace {

void write_json(const spop::Json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw spop::FormatError("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  return buf;
}

void print_summary(const spop::SolveResult& r) {
  const auto& rep = r.report;
  if (rep.contains("error")) {
    std::cerr << "error: " << rep["error"]["message"].get<std::string>();
    if (rep["error"]["type"] == "cap") std::cerr << " [oom-analog]";
    std::cerr << "\n";
    return;
  }
  std::cout << "model   " << rep["config"]["model"].get<std::string>() << "  k=" << rep["order"]["k"] << "\n";
  std::cout << "rip     " << (rep["rip"]["holds"].get<bool>() ? "true" : "false") << "\n";
  std::cout << "status  " << rep["solver"]["status"].get<std::string>() << " (" << rep["solver"]["iterations"]
            << " iterations)\n";
  std::cout << "bound   " << (rep["bound"].is_number() ? fmt(rep["bound"].get<double>()) : rep["bound"].dump())
            << "\n";
  if (r.flat) {
    std::cout << "flat    t=" << (r.flat->common_t ? std::to_string(*r.flat->common_t) : "none") << " ranks";
    for (int x : r.flat->ranks_at(r.flat->common_t.value_or(rep["order"]["k"].get<int>()))) std::cout << " " << x;
    std::cout << "\n";
  }
  if (r.stitched) std::cout << "stitch  " << spop::to_string(r.stitched->status) << " " << r.stitched->reason << "\n";
  for (const auto& c : r.candidates) {
    std::cout << "point  ";
    for (double x : c.x) std::cout << " " << fmt(x);
    std::cout << "  f=" << fmt(c.check.value) << " " << spop::to_string(c.check.verdict) << "\n";
  }
  if (r.verification) {
    std::cout << "cert    " << (r.verification->valid ? "valid " : "invalid ") << r.verification->kind
              << " residual=" << fmt(r.verification->identity_residual) << "\n";
  }
  std::cout << "outcome " << rep["outcome"].get<std::string>() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Moment-SOS relaxations for polynomial optimization"};
  app.require_subcommand(1);
  const auto env = spop::SolverOptions::from_env();

  std::string file, out, cert_out, model = "sparse-putinar";
  int order = 0;
  double tol = 1e-8, epsilon = 0.0;
  bool extract = false, certify = false, force = false;
  int psd_cap = env.psd_cap;
  auto* solve = app.add_subcommand("solve", "Solve a .spop.json problem");
  solve->add_option("file", file, "problem file")->required()->check(CLI::ExistingFile);
  solve->add_option("--order", order, "relaxation order k (default k0)");
  solve->add_option("--model", model, "relaxation model")
      ->check(CLI::IsMember({"sparse-putinar", "sparse-schmudgen", "dense-putinar", "dense-schmudgen"}));
  solve->add_option("--tol", tol, "solver tolerance");
  solve->add_flag("--extract", extract, "flat truncation and minimizer extraction");
  solve->add_flag("--certify", certify, "produce and verify a certificate (implies --extract)");
  solve->add_option("--epsilon", epsilon, "epsilon slack for the certificate");
  solve->add_option("--out", out, "report file (JSON)");
  solve->add_option("--cert-out", cert_out, "certificate file (JSON)");
  solve->add_flag("--force", force, "allow k below the minimal order");
  solve->add_option("--psd-cap", psd_cap, "dimension cap (env SPOP_PSD_CAP)");

  std::string rip_file;
  auto* rip = app.add_subcommand("rip", "Running intersection check of a problem's blocks");
  rip->add_option("file", rip_file, "problem file")->required()->check(CLI::ExistingFile);

  std::string family;
  int bn = 10, bw = 3, bk = 0;
  std::uint64_t seed = 1;
  bool compare = false;
  std::string bench_out, emit;
  auto* bench = app.add_subcommand("bench", "Generate and solve a random instance");
  bench->add_option("family", family, "qcqp or quartic")->required()->check(CLI::IsMember({"qcqp", "quartic"}));
  bench->add_option("--n", bn, "number of variables");
  bench->add_option("--w", bw, "block width");
  bench->add_option("--seed", seed, "generator seed");
  bench->add_option("--order", bk, "relaxation order (default k0)");
  bench->add_flag("--compare-dense", compare, "also solve the dense relaxation");
  bench->add_option("--out", bench_out, "result file (JSON)");
  bench->add_option("--emit", emit, "write the generated problem file");
  bench->add_option("--psd-cap", psd_cap, "dimension cap (env SPOP_PSD_CAP)");

  std::string cert_file, verify_file;
  auto* verify = app.add_subcommand("verify", "Re-verify a certificate against a problem");
  verify->add_option("certificate", cert_file, "certificate file")->required()->check(CLI::ExistingFile);
  verify->add_option("file", verify_file, "problem file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      const auto pop = spop::load_problem(file);
      spop::SolveConfig cfg;
      cfg.k = order;
      cfg.model = spop::parse_model(model);
      cfg.tol = tol;
      cfg.extract = extract || certify;
      cfg.certify = certify;
      cfg.epsilon = epsilon;
      cfg.force = force;
      cfg.psd_cap = psd_cap;
      cfg.source = file;
      const auto r = spop::run_solve(pop, cfg);
      print_summary(r);
      if (!out.empty()) write_json(r.report, out);
      if (!cert_out.empty()) {
        if (r.certificate) {
          auto cj = spop::certificate_to_json(*r.certificate);
          cj["points"] = spop::Json::array();
          for (const auto& c : r.candidates) {
            if (c.check.verdict == spop::Verdict::TightMinimizer) cj["points"].push_back(c.x);
          }
          write_json(cj, cert_out);
        } else if (r.infeasibility) {
          write_json(spop::infeasibility_to_json(*r.infeasibility), cert_out);
        }
      }
      return spop::exit_code(r.outcome);
    }
    if (*rip) {
      const auto pop = spop::load_problem(rip_file);
      write_json(spop::rip_to_json(spop::check_rip(pop.pattern)), "-");
      return 0;
    }
    if (*bench) {
      const auto pop = family == "qcqp" ? spop::gen_qcqp(bn, bw, seed) : spop::gen_quartic(bn, bw, seed);
      if (!emit.empty()) {
        std::ofstream(emit) << spop::emit_problem(pop);
      }
      const int k = bk > 0 ? bk : spop::min_order(pop).k0;
      spop::Json result{{"family", family}, {"n", bn}, {"w", bw}, {"seed", seed}, {"order", k}, {"psd_cap", psd_cap}};
      spop::SolverOptions opts;
      opts.psd_cap = psd_cap;
      if (compare) {
        result["compare"] = spop::compare_to_json(spop::run_compare(pop, k, opts, true));
      } else {
        spop::SolveConfig cfg;
        cfg.k = k;
        cfg.psd_cap = psd_cap;
        cfg.source = family;
        cfg.instance = {{"generator", family}, {"n", bn}, {"w", bw}, {"seed", seed}};
        const auto r = spop::run_solve(pop, cfg);
        result["report"] = r.report;
      }
      write_json(result, bench_out);
      return 0;
    }
    if (*verify) {
      const auto pop = spop::load_problem(verify_file);
      std::ifstream in(cert_file);
      std::stringstream ss;
      ss << in.rdbuf();
      const auto j = spop::Json::parse(ss.str());
      spop::VerifyReport v;
      if (j.value("kind", "") == "infeasibility") {
        v = spop::verify_infeasibility(spop::infeasibility_from_json(j, pop.n()), pop);
      } else {
        std::vector<std::vector<double>> points;
        if (j.contains("points")) points = j.at("points").get<std::vector<std::vector<double>>>();
        v = spop::verify_certificate(spop::certificate_from_json(j, pop.n()), pop, points);
      }
      std::cout << (v.valid ? "valid " : "invalid ") << v.kind << " identity_residual=" << fmt(v.identity_residual)
                << " min_eigenvalue=" << fmt(v.min_eigenvalue) << "\n";
      for (const auto& p : v.problems) std::cout << "  " << p << "\n";
      return v.valid ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
