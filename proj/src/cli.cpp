#include "tlse/cli.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tlse/bench.hpp"
#include "tlse/conditioning.hpp"
#include "tlse/errors.hpp"
#include "tlse/problem_io.hpp"
#include "tlse/tlse_core.hpp"
#include "tlse/wtls.hpp"

namespace tlse::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct Common {
  std::string format = "csv";
};

bool as_json(const Common& c) { return c.format == "json"; }

ojson num(double v) {
  if (std::isfinite(v)) return v;
  return bench::format_sci(v);
}

void print_pairs(std::ostream& out, const Common& c, const std::vector<std::pair<std::string, double>>& pairs,
                 const std::vector<std::string>& warnings) {
  if (as_json(c)) {
    ojson j;
    for (const auto& [k, v] : pairs) j[k] = num(v);
    j["warnings"] = warnings;
    out << j.dump(2) << "\n";
    return;
  }
  out << "name,value\n";
  char buf[64];
  for (const auto& [k, v] : pairs) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << k << "," << buf << "\n";
  }
}

void print_x(std::ostream& out, const Common& c, const Vec& x, std::vector<std::pair<std::string, double>> extra,
             const std::vector<std::string>& warnings) {
  std::vector<std::pair<std::string, double>> pairs;
  for (Index i = 0; i < x.size(); ++i) pairs.emplace_back("x" + std::to_string(i + 1), x(i));
  for (auto& e : extra) pairs.push_back(std::move(e));
  print_pairs(out, c, pairs, warnings);
}

void add_format(CLI::App* sub, Common& c) {
  sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

int solve_cmd(const std::string& input, const std::string& method, const wtls::NwtlsConfig& ncfg, const Common& c,
              std::ostream& out, std::ostream& err) {
  const io::ProblemFile f = io::read_problem(input);
  if (method == "qr-svd") {
    const TlseSolution sol = solve_qr_svd(f.problem);
    for (const auto& w : sol.core.warnings) err << "warning: " << w << "\n";
    print_x(out, c, sol.x, {{"sigma", sol.sigma_small}, {"rho", sol.rho}}, sol.core.warnings);
  } else if (method == "closed") {
    print_x(out, c, solve_closed_form(f.problem), {}, {});
  } else {
    print_x(out, c, wtls::solve_nwtls(f.problem, ncfg), {}, {});
  }
  return kOk;
}

int cond_cmd(const std::string& input, const cond::Weights& w, const std::string& mode, const Common& c,
             std::ostream& out, std::ostream& err) {
  const io::ProblemFile f = io::read_problem(input);
  const TlseSolution sol = solve_qr_svd(f.problem);
  for (const auto& msg : sol.core.warnings) err << "warning: " << msg << "\n";
  const cond::Method method = mode == "exact"     ? cond::Method::Exact
                              : mode == "compact" ? cond::Method::Compact
                                                  : cond::Method::Upper;
  const cond::ConditionReport rep = cond::condition_report(f.problem, sol, w, method);
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::string, double>> pairs;
  if (rep.kappa_n) pairs.emplace_back("kappa_n", *rep.kappa_n);
  pairs.emplace_back("kappa_n_upper", rep.kappa_n_upper);
  pairs.emplace_back("kappa_n_upper_loose", rep.kappa_n_upper_loose);
  if (rep.kappa_m) pairs.emplace_back("kappa_m", *rep.kappa_m);
  pairs.emplace_back("kappa_m_upper", rep.kappa_m_upper);
  if (rep.kappa_c) pairs.emplace_back("kappa_c", rep.kappa_c_infinite ? inf : *rep.kappa_c);
  pairs.emplace_back("kappa_c_upper", rep.kappa_c_infinite ? inf : rep.kappa_c_upper);
  print_pairs(out, c, pairs, sol.core.warnings);
  return kOk;
}

void report_warnings(std::ostream& err, const std::vector<bench::ExperimentRow>& rows) {
  for (const auto& r : rows) {
    std::string label;
    for (const auto& [k, v] : r.labels) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%g", v);
      label += k + "=" + buf + " ";
    }
    for (const auto& w : r.warnings) err << "warning: " << label << w << "\n";
  }
}

int emit(const std::vector<bench::ExperimentRow>& rows, const Common& c, std::ostream& out, std::ostream& err) {
  report_warnings(err, rows);
  out << bench::emit_table(rows, as_json(c) ? bench::TableFormat::Json : bench::TableFormat::Csv);
  return kOk;
}

int table1_cmd(const std::vector<double>& kappas, int trials, std::uint64_t seed, double scale, const Common& c,
               std::ostream& out, std::ostream& err) {
  if (trials < 1) throw Error(ErrorKind::Input, "--trials must be at least 1");
  std::vector<bench::ExperimentRow> rows;
  std::uint64_t s = seed;
  for (const double kc : kappas) {
    for (int t = 0; t < trials; ++t, ++s) {
      bench::EquilibratorySpec spec;
      spec.kappa_C = kc;
      spec.seed = s;
      const TlseProblem prob = bench::gen_equilibratory(spec);
      auto row = bench::run_experiment(prob, bench::perturb(prob, bench::PerturbMode::Normwise, scale, s));
      row.labels = {{"kappa_C", kc}, {"trial", static_cast<double>(t)}};
      rows.push_back(std::move(row));
    }
  }
  return emit(rows, c, out, err);
}

int table2_cmd(const std::vector<int>& ms, const std::vector<double>& deltas, std::uint64_t seed, double scale,
               const wtls::NwtlsConfig& ncfg, const Common& c, std::ostream& out, std::ostream& err) {
  std::vector<bench::ExperimentRow> rows;
  std::uint64_t s = seed;
  for (const double delta : deltas) {
    for (const int m : ms) {
      if (m < 10) throw Error(ErrorKind::Input, "--m entries must be at least 10");
      const TlseProblem prob = bench::gen_householder_spectrum(bench::HouseholderSpectrumSpec::from_m(m, delta, s));
      bench::ExperimentOptions opts;
      opts.solver = bench::SolverChoice::Nwtls;
      opts.nwtls_eps = ncfg.eps;
      opts.nwtls_k = ncfg.k;
      opts.nwtls_oversample = ncfg.oversample;
      opts.nwtls_seed = s;
      auto row = bench::run_experiment(prob, bench::perturb(prob, bench::PerturbMode::Normwise, scale, s), opts);
      row.labels = {{"delta", delta}, {"m", static_cast<double>(m)}};
      rows.push_back(std::move(row));
      ++s;
    }
  }
  return emit(rows, c, out, err);
}

int table3_cmd(const std::vector<double>& as, std::uint64_t seed, double scale, bool continuous, const Common& c,
               std::ostream& out, std::ostream& err) {
  std::vector<bench::ExperimentRow> rows;
  std::uint64_t s = seed;
  for (const double a : as) {
    bench::PiecewisePolySpec spec;
    spec.a = a;
    spec.seed = s;
    spec.continuous_truth = continuous;
    const auto gen = bench::gen_piecewise_poly(spec);
    auto row = bench::run_experiment(gen.problem,
                                     bench::perturb(gen.problem, bench::PerturbMode::Componentwise, scale, s));
    row.labels = {{"a", a}};
    rows.push_back(std::move(row));
    ++s;
  }
  return emit(rows, c, out, err);
}

struct GenArgs {
  std::string kind;
  int p = -1, q = -1, n = -1, m = 0, M = 200, N = 400;
  double kappa_c = 1e2, delta = 1e-3, a = 0.5;
  bool free_coefficients = false;
  std::uint64_t seed = 0;
  std::string out_path;
};

int gen_cmd(const GenArgs& g, std::ostream& out) {
  TlseProblem prob;
  ojson meta;
  meta["kind"] = g.kind;
  if (g.kind == "equilibratory") {
    bench::EquilibratorySpec s;
    if (g.p >= 0) s.p = g.p;
    if (g.q >= 0) s.q = g.q;
    if (g.n >= 0) s.n = g.n;
    s.kappa_C = g.kappa_c;
    s.seed = g.seed;
    prob = bench::gen_equilibratory(s);
    meta["kappa_C"] = s.kappa_C;
  } else if (g.kind == "householder_spectrum") {
    bench::HouseholderSpectrumSpec s;
    if (g.m > 0) s = bench::HouseholderSpectrumSpec::from_m(g.m, g.delta, g.seed);
    if (g.p >= 0) s.p = g.p;
    if (g.q >= 0) s.q = g.q;
    if (g.n >= 0) s.n = g.n;
    s.delta = g.delta;
    s.seed = g.seed;
    prob = bench::gen_householder_spectrum(s);
    meta["delta"] = s.delta;
  } else {
    bench::PiecewisePolySpec s;
    s.M = g.M;
    s.N = g.N;
    s.a = g.a;
    s.seed = g.seed;
    s.continuous_truth = !g.free_coefficients;
    const auto pp = bench::gen_piecewise_poly(s);
    prob = pp.problem;
    meta["a"] = s.a;
    meta["x_true"] = std::vector<double>(pp.x_true.data(), pp.x_true.data() + pp.x_true.size());
  }
  if (g.out_path.empty()) {
    out << io::dump_problem(prob, g.seed, meta.dump());
  } else {
    io::write_problem(g.out_path, prob, g.seed, meta.dump());
  }
  return kOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input:
    case ErrorKind::Rank:
    case ErrorKind::Misuse:
      return kInputError;
    case ErrorKind::IllPosed:
    case ErrorKind::NonGeneric:
      return kIllPosed;
    default:
      return kFailure;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equality-constrained total least squares: solvers, condition numbers, experiment tables"};
  app.require_subcommand(1);

  Common common;
  std::string input, method = "qr-svd", mode = "exact";
  wtls::NwtlsConfig ncfg;
  cond::Weights weights;
  double scale = 1e-8;
  std::uint64_t seed = 0;

  auto* solve = app.add_subcommand("solve", "Solve a problem file");
  solve->add_option("--input", input, "Problem JSON")->required();
  solve->add_option("--method", method)->check(CLI::IsMember({"qr-svd", "closed", "nwtls"}));
  solve->add_option("--eps", ncfg.eps, "Weight for nwtls");
  solve->add_option("--k", ncfg.k, "Target rank for nwtls (default n-p+1)");
  solve->add_option("--oversample", ncfg.oversample);
  solve->add_option("--seed", ncfg.seed);
  add_format(solve, common);

  auto* condc = app.add_subcommand("cond", "Condition numbers of a problem file");
  condc->add_option("--input", input, "Problem JSON")->required();
  condc->add_option("--alpha", weights.alpha);
  condc->add_option("--beta", weights.beta);
  condc->add_option("--mode", mode)->check(CLI::IsMember({"exact", "compact", "upper"}));
  add_format(condc, common);

  std::vector<double> kappas{1e2, 1e3, 1e4, 1e5};
  int trials = 2;
  auto* t1 = app.add_subcommand("table1", "Equilibratory problems, normwise bounds");
  t1->add_option("--kappa-c", kappas)->delimiter(',');
  t1->add_option("--trials", trials);
  t1->add_option("--seed", seed);
  t1->add_option("--scale", scale, "Perturbation scale");
  add_format(t1, common);

  std::vector<int> ms{50, 100};
  std::vector<double> deltas{1e-2, 1e-3, 1e-4};
  auto* t2 = app.add_subcommand("table2", "Prescribed spectrum, randomized solver");
  t2->add_option("--m", ms)->delimiter(',');
  t2->add_option("--delta", deltas)->delimiter(',');
  t2->add_option("--seed", seed);
  t2->add_option("--scale", scale, "Perturbation scale");
  t2->add_option("--eps", ncfg.eps);
  t2->add_option("--k", ncfg.k);
  t2->add_option("--oversample", ncfg.oversample);
  add_format(t2, common);

  std::vector<double> as{0.05, 0.1, 0.3, 0.5, 0.7, 0.9};
  bool continuous = false;
  auto* t3 = app.add_subcommand("table3", "Piecewise polynomial fit, componentwise bounds");
  t3->add_option("--a", as)->delimiter(',');
  t3->add_option("--seed", seed);
  t3->add_option("--scale", scale, "Perturbation scale");
  t3->add_flag("--continuous-truth", continuous, "Generate samples from a C^1 piecewise cubic (zero residual)");
  add_format(t3, common);

  GenArgs g;
  auto* gen = app.add_subcommand("gen", "Write a generated problem as JSON");
  gen->add_option("--kind", g.kind)
      ->required()
      ->check(CLI::IsMember({"equilibratory", "householder_spectrum", "piecewise_poly"}));
  gen->add_option("--p", g.p);
  gen->add_option("--q", g.q);
  gen->add_option("--n", g.n);
  gen->add_option("--m", g.m, "householder_spectrum: p = m/10, n = m/5");
  gen->add_option("--kappa-c", g.kappa_c);
  gen->add_option("--delta", g.delta);
  gen->add_option("--M", g.M);
  gen->add_option("--N", g.N);
  gen->add_option("--a", g.a);
  gen->add_flag("--free-coefficients", g.free_coefficients, "piecewise_poly: draw all eight coefficients independently");
  gen->add_option("--seed", g.seed);
  gen->add_option("--out", g.out_path);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (*solve) return solve_cmd(input, method, ncfg, common, out, err);
    if (*condc) return cond_cmd(input, weights, mode, common, out, err);
    if (*t1) return table1_cmd(kappas, trials, seed, scale, common, out, err);
    if (*t2) return table2_cmd(ms, deltas, seed, scale, ncfg, common, out, err);
    if (*t3) return table3_cmd(as, seed, scale, continuous, common, out, err);
    if (*gen) return gen_cmd(g, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kInputError;
}

}  // namespace tlse::cli
