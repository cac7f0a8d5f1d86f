#include "tlse/bench.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>

#include "json.hpp"
#include "tlse/errors.hpp"
#include "tlse/wtls.hpp"

namespace tlse::bench {

namespace {

using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

Mat uniform(Rng& rng, Index rows, Index cols, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Mat out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = dist(rng);
  return out;
}

Vec random_unit(Rng& rng, Index n) {
  Vec v = uniform(rng, n, 1);
  return v / v.norm();
}

// (I - 2 y y^T) S
Mat reflect_rows(const Vec& y, const Mat& S) { return S - 2.0 * y * (y.transpose() * S); }

// S (I - 2 z z^T)^T
Mat reflect_cols(const Mat& S, const Vec& z) { return S - 2.0 * (S * z) * z.transpose(); }

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// |num| / |den| entrywise max with xi/0 -> inf (xi != 0) and 0/0 -> 0.
double max_ratio(const Mat& num, const Mat& den) {
  double out = 0.0;
  for (Index j = 0; j < num.cols(); ++j) {
    for (Index i = 0; i < num.rows(); ++i) {
      const double a = std::abs(num(i, j)), b = std::abs(den(i, j));
      if (a == 0.0) continue;
      if (b == 0.0) return kInf;
      out = std::max(out, a / b);
    }
  }
  return out;
}

}  // namespace

HouseholderSpectrumSpec HouseholderSpectrumSpec::from_m(Index m, double delta, std::uint64_t seed) {
  HouseholderSpectrumSpec s;
  s.p = m / 10;
  s.n = m / 5;
  s.q = m - s.p;
  s.delta = delta;
  s.seed = seed;
  return s;
}

TlseProblem gen_equilibratory(const EquilibratorySpec& spec) {
  const Index p = spec.p, q = spec.q, n = spec.n;
  if (p < 0 || n < 1 || p >= n || q < n - p + 1) throw Error(ErrorKind::Input, "equilibratory: inconsistent dimensions");
  if (p == 1) throw Error(ErrorKind::Input, "equilibratory: p >= 2 is needed to realize kappa_C");
  if (p > 0 && !(spec.kappa_C > 1.0)) throw Error(ErrorKind::Input, "equilibratory: kappa_C must exceed 1");

  for (std::uint64_t stream = 0; stream < 16; ++stream) {
    Rng rng = make_rng(spec.seed, stream);
    const Mat Ab = uniform(rng, q, n + 1);
    Mat Ct(p, n + 1);
    if (p > 0) {
      const Vec y = random_unit(rng, p);
      const Vec z = random_unit(rng, n + 1);
      // redraw until every free entry stays above max/kappa, so that the last one is the minimum
      Vec D = uniform(rng, p, 1);
      while (D.head(p - 1).minCoeff() < D.head(p - 1).maxCoeff() / spec.kappa_C) D = uniform(rng, p, 1);
      D(p - 1) = D.head(p - 1).maxCoeff() / spec.kappa_C;
      Mat S = Mat::Zero(p, n + 1);
      S.leftCols(p) = D.asDiagonal();
      Ct = reflect_cols(reflect_rows(y, S), z);
      const Vec sv = dense::singular_values(Ct.leftCols(n));
      if (!(sv(p - 1) > dense::kRankTol * sv(0))) continue;
    }
    return TlseProblem(Ct.leftCols(n), Ct.col(n), Ab.leftCols(n), Ab.col(n));
  }
  throw Error(ErrorKind::Numerical, "equilibratory: could not draw a full-rank constraint");
}

TlseProblem gen_householder_spectrum(const HouseholderSpectrumSpec& spec) {
  const Index p = spec.p, q = spec.q, n = spec.n, m = p + q;
  if (p < 0 || n < 1 || p >= n || q < n - p + 1) throw Error(ErrorKind::Input, "householder: inconsistent dimensions");
  if (!(spec.delta > 0.0)) throw Error(ErrorKind::Input, "householder: delta must be positive");

  Rng rng = make_rng(spec.seed);
  const Vec y = random_unit(rng, m);
  const Vec z = random_unit(rng, n + 1);
  Mat S = Mat::Zero(m, n + 1);
  for (Index i = 0; i < n; ++i) S(i, i) = static_cast<double>(n - i);
  S(n, n) = spec.delta;
  const Mat Lh = reflect_cols(reflect_rows(y, S), z);
  return TlseProblem(Lh.topLeftCorner(p, n), Lh.col(n).head(p), Lh.bottomLeftCorner(q, n), Lh.col(n).tail(q));
}

PiecewisePolyProblem gen_piecewise_poly(const PiecewisePolySpec& spec) {
  const Index M = spec.M, N = spec.N;
  const double a = spec.a;
  if (!(M > 0 && M < N)) throw Error(ErrorKind::Input, "piecewise: need 0 < M < N");
  if (!(a > 0.0 && a < 1.0)) throw Error(ErrorKind::Input, "piecewise: breakpoint a must lie in (0, 1)");
  if (M < 4 || N - M < 4) throw Error(ErrorKind::Input, "piecewise: each piece needs at least four samples");

  Rng rng = make_rng(spec.seed);
  PiecewisePolyProblem out;
  out.t.resize(N);
  out.t.head(M) = a * uniform(rng, M, 1);
  out.t.tail(N - M) = Vec::Constant(N - M, a) + (1.0 - a) * uniform(rng, N - M, 1);

  // x5, x6 follow from f1(a) = f2(a), f1'(a) = f2'(a) unless drawn freely.
  const Mat free = uniform(rng, 6, 1, -1.0, 1.0);
  Vec x(8);
  x(0) = free(0);
  x(1) = free(1);
  x(2) = free(2);
  x(3) = free(3);
  x(6) = free(4);
  x(7) = free(5);
  const double a2 = a * a, a3 = a2 * a;
  if (spec.continuous_truth) {
    x(5) = x(1) + 2.0 * a * x(2) + 3.0 * a2 * x(3) - 2.0 * a * x(6) - 3.0 * a2 * x(7);
    x(4) = x(0) + a * x(1) + a2 * x(2) + a3 * x(3) - a * x(5) - a2 * x(6) - a3 * x(7);
  } else {
    const Mat extra = uniform(rng, 2, 1, -1.0, 1.0);
    x(4) = extra(0);
    x(5) = extra(1);
  }
  out.x_true = x;

  Mat C(2, 8);
  C << 1, a, a2, a3, -1, -a, -a2, -a3,
       0, 1, 2 * a, 3 * a2, 0, -1, -2 * a, -3 * a2;

  Mat A = Mat::Zero(N, 8);
  for (Index i = 0; i < N; ++i) {
    const double ti = out.t(i);
    const Index off = i < M ? 0 : 4;
    A(i, off) = 1.0;
    A(i, off + 1) = ti;
    A(i, off + 2) = ti * ti;
    A(i, off + 3) = ti * ti * ti;
  }
  const Vec b = A * x;
  out.problem = TlseProblem(C, Vec::Zero(2), A, b);
  return out;
}

PerturbationSample perturb(const TlseProblem& problem, PerturbMode mode, double scale, std::uint64_t seed) {
  if (!(scale > 0.0)) throw Error(ErrorKind::Input, "perturbation scale must be positive");
  const Index p = problem.p(), q = problem.q(), n = problem.n(), m = problem.m();
  Rng rng = make_rng(seed, 0x5eed);
  PerturbationSample s;
  s.scale = scale;
  s.mode = mode;
  if (mode == PerturbMode::Normwise) {
    const Mat E = uniform(rng, m, n + 1);
    s.dL = scale * E.leftCols(n);
    s.dh = scale * E.col(n);
    return s;
  }
  const Mat EC = uniform(rng, p, n);
  const Mat EA = uniform(rng, q, n);
  const Mat Eb = uniform(rng, q, 1);
  s.dL.resize(m, n);
  s.dL.topRows(p) = scale * EC.cwiseProduct(problem.C());
  s.dL.bottomRows(q) = scale * EA.cwiseProduct(problem.A());
  s.dh = Vec::Zero(m);
  s.dh.tail(q) = scale * Eb.col(0).cwiseProduct(problem.b());
  return s;
}

double normwise_backward_error(const TlseProblem& problem, const PerturbationSample& s) {
  const double num = std::sqrt(s.dL.squaredNorm() + s.dh.squaredNorm());
  return num / problem.Lh().norm();
}

double componentwise_backward_error(const TlseProblem& problem, const PerturbationSample& s) {
  return std::max(max_ratio(s.dL, problem.L()), max_ratio(s.dh, problem.h()));
}

ExperimentRow run_experiment(const TlseProblem& problem, const PerturbationSample& perturbation,
                             const ExperimentOptions& opts) {
  ExperimentRow row;
  const TlseSolution sol = solve_qr_svd(problem);
  row.warnings = sol.core.warnings;
  const Vec& x = sol.x;

  row.eps1 = normwise_backward_error(problem, perturbation);
  row.eps2 = componentwise_backward_error(problem, perturbation);

  const cond::KOperator op = cond::build_k_operator(problem, sol);
  cond::ConditionReport rep;
  try {
    rep = cond::condition_report(problem, sol, opts.weights, cond::Method::Exact);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Resource) throw;
    rep = cond::condition_report(problem, sol, opts.weights, cond::Method::Compact);
  }
  row.eps1_kappa_n = row.eps1 * rep.kappa_n.value_or(kNaN);
  row.eps1_kappa_n_upper = row.eps1 * rep.kappa_n_upper;
  row.eps2_kappa_m = row.eps2 * rep.kappa_m.value_or(kNaN);
  row.eps2_kappa_m_upper = row.eps2 * rep.kappa_m_upper;
  row.eps2_kappa_c = rep.kappa_c_infinite ? kInf : row.eps2 * rep.kappa_c.value_or(kNaN);
  row.eps2_kappa_c_upper = rep.kappa_c_infinite ? kInf : row.eps2 * rep.kappa_c_upper;

  row.ca_pinv_norm = dense::spectral_norm(sol.C_A_pinv);
  const double smin = sol.core.sigma_tilde(sol.core.sigma_tilde.size() - 1);
  row.cond_core = smin > 0.0 ? sol.core.sigma_tilde(0) / smin : kInf;

  const TlseProblem pert = problem.perturbed(perturbation.dL, perturbation.dh);
  wtls::NwtlsConfig ncfg;
  ncfg.eps = opts.nwtls_eps;
  ncfg.k = opts.nwtls_k;
  ncfg.oversample = opts.nwtls_oversample;
  ncfg.seed = opts.nwtls_seed;

  Vec x_hat;
  try {
    const TlseSolution psol = solve_qr_svd(pert);
    x_hat = psol.x;
    for (const auto& w : psol.core.warnings) row.warnings.push_back("perturbed: " + w);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::IllPosed && e.kind() != ErrorKind::NonGeneric) throw;
    row.degenerate = true;
    row.warnings.push_back(std::string("perturbed problem: ") + e.what());
  }

  if (row.degenerate) {
    row.fwd_err_2 = row.fwd_err_inf = row.fwd_err_cw = row.eta_rel = kNaN;
  } else {
    const Vec dx = x_hat - x;
    row.fwd_err_2 = dx.norm() / x.norm();
    row.fwd_err_inf = dx.cwiseAbs().maxCoeff() / x.cwiseAbs().maxCoeff();
    row.fwd_err_cw = max_ratio(dx, x);
    const Vec first_order = cond::apply_k(op, perturbation.dL, perturbation.dh);
    const double dxn = dx.norm();
    row.eta_rel = dxn > 0.0 ? (dx - first_order).norm() / dxn : 0.0;
  }

  if (opts.solver == SolverChoice::Nwtls) {
    const Vec x_nw = wtls::solve_nwtls(problem, ncfg);
    row.e_nwtls = (x_nw - x).norm() / x.norm();
    if (!row.degenerate) {
      const Vec x_nw_pert = wtls::solve_nwtls(pert, ncfg);
      row.fwd_err_2_nwtls = (x_nw_pert - x_nw).norm() / x_nw.norm();
    }
  }
  return row;
}

const std::vector<std::string>& table_columns() {
  static const std::vector<std::string> cols = {
      "fwd_err_2",     "fwd_err_inf",        "fwd_err_cw",   "eta_rel",
      "eps1",          "eps2",               "eps1_kappa_n", "eps1_kappa_n_upper",
      "eps2_kappa_m",  "eps2_kappa_m_upper", "eps2_kappa_c", "eps2_kappa_c_upper",
      "ca_pinv_norm",  "cond_core",          "e_nwtls",      "fwd_err_2_nwtls",
      "degenerate"};
  return cols;
}

namespace {

std::optional<double> column_value(const ExperimentRow& r, std::size_t i) {
  switch (i) {
    case 0: return r.fwd_err_2;
    case 1: return r.fwd_err_inf;
    case 2: return r.fwd_err_cw;
    case 3: return r.eta_rel;
    case 4: return r.eps1;
    case 5: return r.eps2;
    case 6: return r.eps1_kappa_n;
    case 7: return r.eps1_kappa_n_upper;
    case 8: return r.eps2_kappa_m;
    case 9: return r.eps2_kappa_m_upper;
    case 10: return r.eps2_kappa_c;
    case 11: return r.eps2_kappa_c_upper;
    case 12: return r.ca_pinv_norm;
    case 13: return r.cond_core;
    case 14: return r.e_nwtls;
    case 15: return r.fwd_err_2_nwtls;
    default: return std::nullopt;
  }
}

void set_column(ExperimentRow& r, std::size_t i, std::optional<double> v) {
  const double d = v.value_or(kNaN);
  switch (i) {
    case 0: r.fwd_err_2 = d; break;
    case 1: r.fwd_err_inf = d; break;
    case 2: r.fwd_err_cw = d; break;
    case 3: r.eta_rel = d; break;
    case 4: r.eps1 = d; break;
    case 5: r.eps2 = d; break;
    case 6: r.eps1_kappa_n = d; break;
    case 7: r.eps1_kappa_n_upper = d; break;
    case 8: r.eps2_kappa_m = d; break;
    case 9: r.eps2_kappa_m_upper = d; break;
    case 10: r.eps2_kappa_c = d; break;
    case 11: r.eps2_kappa_c_upper = d; break;
    case 12: r.ca_pinv_norm = d; break;
    case 13: r.cond_core = d; break;
    case 14: r.e_nwtls = v; break;
    case 15: r.fwd_err_2_nwtls = v; break;
    default: break;
  }
}

std::string format_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

using ojson = nlohmann::ordered_json;

ojson json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const ojson& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return kNaN;
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw Error(ErrorKind::Input, "unexpected string in numeric field: " + s);
  }
  return j.get<double>();
}

}  // namespace

std::string format_sci(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  const std::string s(buf);
  const auto e = s.find('e');
  const std::string mantissa = s.substr(0, e);
  const int exponent = std::stoi(s.substr(e + 1));
  return mantissa + "e" + (exponent < 0 ? "-" : "+") + std::to_string(std::abs(exponent));
}

std::string emit_table(const std::vector<ExperimentRow>& rows, TableFormat format) {
  const auto& cols = table_columns();
  if (format == TableFormat::Json) {
    ojson arr = ojson::array();
    for (const auto& r : rows) {
      ojson obj;
      ojson labels = ojson::array();
      for (const auto& [name, value] : r.labels) labels.push_back(ojson::array({name, json_number(value)}));
      obj["labels"] = labels;
      for (std::size_t i = 0; i + 1 < cols.size(); ++i) {
        const auto v = column_value(r, i);
        obj[cols[i]] = v ? json_number(*v) : ojson(nullptr);
      }
      obj["degenerate"] = r.degenerate;
      obj["warnings"] = r.warnings;
      arr.push_back(obj);
    }
    return arr.dump(2) + "\n";
  }

  std::string out;
  if (!rows.empty()) {
    for (const auto& [name, value] : rows.front().labels) out += name + ",";
  }
  for (std::size_t i = 0; i < cols.size(); ++i) out += cols[i] + (i + 1 < cols.size() ? "," : "\n");
  for (const auto& r : rows) {
    for (const auto& [name, value] : r.labels) out += format_label(value) + ",";
    for (std::size_t i = 0; i + 1 < cols.size(); ++i) {
      const auto v = column_value(r, i);
      out += (v ? format_sci(*v) : std::string()) + ",";
    }
    out += r.degenerate ? "1\n" : "0\n";
  }
  return out;
}

std::vector<ExperimentRow> parse_table_json(const std::string& text) {
  const auto& cols = table_columns();
  std::vector<ExperimentRow> rows;
  ojson arr;
  try {
    arr = ojson::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Input, std::string("table JSON: ") + e.what());
  }
  if (!arr.is_array()) throw Error(ErrorKind::Input, "table JSON must be an array");
  for (const auto& obj : arr) {
    ExperimentRow r;
    for (const auto& pair : obj.at("labels")) r.labels.emplace_back(pair.at(0).get<std::string>(), number_from_json(pair.at(1)));
    for (std::size_t i = 0; i + 1 < cols.size(); ++i) {
      const auto& v = obj.at(cols[i]);
      set_column(r, i, v.is_null() ? std::nullopt : std::optional<double>(number_from_json(v)));
    }
    r.degenerate = obj.at("degenerate").get<bool>();
    r.warnings = obj.at("warnings").get<std::vector<std::string>>();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace tlse::bench
