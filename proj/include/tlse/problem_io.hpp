#pragma once

// JSON problem files: {"C": [[..]], "d": [..], "A": [[..]], "b": [..], "seed": N, "meta": {..}}
// with matrices stored row-major. An unconstrained problem uses "C": [] and "d": [].

#include <cstdint>
#include <optional>
#include <string>

#include "tlse/tlse_core.hpp"

namespace tlse::io {

struct ProblemFile {
  TlseProblem problem;
  std::optional<std::uint64_t> seed;
  std::string meta_json = "{}";
};

ProblemFile parse_problem(const std::string& text);
ProblemFile read_problem(const std::string& path);

std::string dump_problem(const TlseProblem& problem, std::optional<std::uint64_t> seed = std::nullopt,
                         const std::string& meta_json = "{}");
void write_problem(const std::string& path, const TlseProblem& problem,
                   std::optional<std::uint64_t> seed = std::nullopt, const std::string& meta_json = "{}");

}  // namespace tlse::io
