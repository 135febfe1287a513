#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmpir/dbstore.hpp"
#include "pmpir/mpir.hpp"

namespace pmpir {

struct ExperimentConfig {
  SchemeId scheme = SchemeId::MSR_A;
  std::size_t k = 3;
  std::size_t p = 1;
  std::size_t m = 3;
  std::optional<std::size_t> r;      // MBR only
  std::optional<Residue> q;
  std::uint64_t seed = 1;
  std::optional<std::vector<std::size_t>> desired;  // 0-based; random per trial when empty
  std::size_t trials = 1;
  bool repair = false;   // fail and repair every node before retrieving
  bool oracle = false;   // cross-check each decode with the decodability oracle
  bool timing = false;   // record wall-clock time (breaks byte-identical reports)
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Measurements {
  std::size_t trials = 0;
  std::uint64_t downloaded_symbols = 0;
  std::uint64_t stored_symbols = 0;
  std::uint64_t repair_symbols = 0;
  std::uint64_t repaired_symbols = 0;  // node symbols restored by repair
  Rational cpop;                       // downloaded / (p ell trials)
  Rational so;                         // stored / (m ell)
  std::optional<Rational> rr;          // repair / repaired
};

struct ExperimentReport {
  std::string experiment;
  ExperimentConfig config;
  CodeParams params;
  Residue q = 0;
  std::size_t d = 0;
  Metrics metrics;
  Rational identity;
  bool bound_holds = false;
  std::optional<Measurements> measured;
  std::vector<Check> checks;
  std::optional<std::uint64_t> failing_seed;
  std::optional<double> wall_clock_ms;

  bool passed() const;
  std::string to_json(int indent = 2) const;
};

// Symbolic contents of every node: table[node][column] is the linear form in
// x_{record,symbol}, e.g. "x11+2x12+4x14+8x15". Columns run over records.
std::vector<std::vector<std::string>> symbolic_storage_table(const EncodingMatrix& enc,
                                                             std::size_t m);

ExperimentReport run_example_1(std::size_t trials = 1, std::uint64_t seed = 1);
ExperimentReport run_example_2(std::size_t trials = 1, std::uint64_t seed = 1);
ExperimentReport run_experiment(const ExperimentConfig& config);

struct RetrievalRun {
  QueryPlan plan;
  AnswerSet answers;
  DecodeResult decoded;
  std::optional<std::vector<Vec>> oracle_records;
};

// One retrieval against a store. Throws DecodeFailure / NotDecodable.
RetrievalRun retrieve(const EncodedDatabase& edb, SchemeId scheme,
                      const std::vector<std::size_t>& desired, std::uint64_t seed, bool oracle);

}  // namespace pmpir
