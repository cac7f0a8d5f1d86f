#include "tlse/problem_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tlse/errors.hpp"

namespace tlse::io {

namespace {

using json = nlohmann::json;

Mat to_matrix(const json& j, const char* name, Index cols_hint) {
  if (!j.is_array()) throw Error(ErrorKind::Input, std::string(name) + " must be an array of rows");
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Mat(0, cols_hint);
  const Index cols = static_cast<Index>(j[0].size());
  Mat M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw Error(ErrorKind::Input, std::string(name) + " has ragged rows");
    }
    for (Index k = 0; k < cols; ++k) {
      const json& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) throw Error(ErrorKind::Input, std::string(name) + " has a non-numeric entry");
      M(i, k) = v.get<double>();
    }
  }
  return M;
}

Vec to_vector(const json& j, const char* name) {
  if (!j.is_array()) throw Error(ErrorKind::Input, std::string(name) + " must be an array");
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorKind::Input, std::string(name) + " has a non-numeric entry");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

json from_matrix(const Mat& M) {
  json out = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
    out.push_back(row);
  }
  return out;
}

json from_vector(const Vec& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

ProblemFile parse_problem(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Input, std::string("problem file: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::Input, "problem file must hold a JSON object");
  for (const char* key : {"A", "b"}) {
    if (!j.contains(key)) throw Error(ErrorKind::Input, std::string("problem file lacks \"") + key + "\"");
  }
  const Mat A = to_matrix(j["A"], "A", 0);
  const Vec b = to_vector(j["b"], "b");
  const Mat C = j.contains("C") ? to_matrix(j["C"], "C", A.cols()) : Mat(0, A.cols());
  const Vec d = j.contains("d") ? to_vector(j["d"], "d") : Vec(0);

  ProblemFile out{TlseProblem(C, d, A, b), std::nullopt, "{}"};
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw Error(ErrorKind::Input, "seed must be a nonnegative integer");
    out.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("meta")) out.meta_json = j["meta"].dump();
  return out;
}

ProblemFile read_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

std::string dump_problem(const TlseProblem& problem, std::optional<std::uint64_t> seed, const std::string& meta_json) {
  json j;
  j["C"] = from_matrix(problem.C());
  j["d"] = from_vector(problem.d());
  j["A"] = from_matrix(problem.A());
  j["b"] = from_vector(problem.b());
  if (seed) j["seed"] = *seed;
  j["meta"] = json::parse(meta_json);
  return j.dump(1) + "\n";
}

void write_problem(const std::string& path, const TlseProblem& problem, std::optional<std::uint64_t> seed,
                   const std::string& meta_json) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Input, "cannot write " + path);
  out << dump_problem(problem, seed, meta_json);
}

}  // namespace tlse::io
