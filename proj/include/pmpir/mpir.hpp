#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmpir/dbstore.hpp"
#include "pmpir/field.hpp"
#include "pmpir/linalg.hpp"
#include "pmpir/pmcode.hpp"
#include "pmpir/rational.hpp"

namespace pmpir {

// MSR_A: identity blocks, d = alpha, n = pk + 2k - 2.
// MSR_B: cyclic-shift blocks, d = k, n = (p + 2)(k - 1), p <= 2k - 2.
// MBR:   identity blocks, d = alpha = r, n = pk + r.
enum class SchemeId { MSR_A, MSR_B, MBR };

std::string to_string(SchemeId scheme);
// Accepts "msr-a", "msr_a", "MSR_A", ... ; throws InvalidParameters.
SchemeId parse_scheme(const std::string& name);
CodeFamily family_of(SchemeId scheme);

// Number of nodes the scheme needs for p desired records.
std::size_t scheme_node_count(SchemeId scheme, std::size_t k, std::size_t p,
                              std::optional<std::size_t> r = std::nullopt);
// Code parameters of the scheme. MBR's r defaults to k.
CodeParams scheme_params(SchemeId scheme, std::size_t k, std::size_t p,
                         std::optional<std::size_t> r = std::nullopt);
// Inverse of scheme_node_count for a stored code; throws if n fits no p.
std::size_t scheme_p_from_params(SchemeId scheme, const CodeParams& params);

// One 1-entry of a binary matrix V^{node_slot}: subquery `subquery` at `node`
// retrieves symbol `symbol` of the record in desired slot `slot`.
struct Selection {
  std::size_t node;
  std::size_t slot;
  std::size_t subquery;
  std::size_t symbol;
};

struct RetrievalPattern {
  SchemeId scheme;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t r = 0;
  std::size_t alpha = 0;
  std::size_t p = 0;
  std::size_t d = 0;
  std::vector<Selection> selections;

  // d x alpha 0/1 matrix V for (node, slot), row-major.
  std::vector<std::vector<int>> v_matrix(std::size_t node, std::size_t slot) const;
  // Nodes whose answers to `subquery` carry only interference; these r rows
  // of Psi are inverted during decoding.
  std::vector<std::size_t> interference_nodes(std::size_t subquery) const;
};

// Throws InvalidParameters for a node count that does not match the scheme,
// or MSR_B with p > 2k-2. p = 0 yields an empty pattern (every query is U).
RetrievalPattern make_pattern(SchemeId scheme, const CodeParams& params, std::size_t p);

// Keeps only the first d subqueries. Used to probe the decodability bound.
RetrievalPattern truncate_pattern(const RetrievalPattern& pattern, std::size_t d);

// Cell labels of C^T restricted to the desired records: an (m*alpha) x n grid
// whose entry is t + 1 when subquery t retrieves that symbol, 0 otherwise.
std::vector<std::vector<int>> label_table(const RetrievalPattern& pattern,
                                          std::span<const std::size_t> desired, std::size_t m);

// Sorted, distinct, in [0, m), of size p. Throws InvalidParameters.
std::vector<std::size_t> normalize_desired(std::span<const std::size_t> desired, std::size_t p,
                                           std::size_t m);

// Sum_u V^{node_{f_u}} E^{f_u}: the deterministic part of node's query.
Mat query_offset(const RetrievalPattern& pattern, std::size_t node,
                 std::span<const std::size_t> desired, std::size_t m, const PrimeField& field);
// Q^node = U + query_offset(...).
Mat assemble_query(const RetrievalPattern& pattern, std::size_t node, const Mat& u,
                   std::span<const std::size_t> desired, std::size_t m);

struct QueryPlan {
  Mat u;
  std::vector<std::size_t> desired;
  std::vector<Mat> queries;
  RetrievalPattern pattern;
  std::size_t m = 0;
  std::uint64_t seed = 0;
};

QueryPlan gen_queries(const RetrievalPattern& pattern, std::span<const std::size_t> desired,
                      std::size_t m, const PrimeField& field, std::uint64_t seed);

// A_node^T = Q^node * C_node^T.
Vec answer(std::span<const FieldElement> node_row, const Mat& query);

struct AnswerSet {
  std::vector<Vec> answers;
  std::uint64_t downloaded_symbols = 0;
};

// Every node answers its query; dead nodes throw NodeUnavailable.
AnswerSet answer_all(const EncodedDatabase& edb, const QueryPlan& plan);

struct ExtractedSymbol {
  std::size_t slot;
  std::size_t record;  // database index f_u
  std::size_t node;
  std::size_t symbol;  // within the record's alpha block
  std::size_t column;  // global column record * alpha + symbol of C_node
  FieldElement value;
};

struct SubqueryTrace {
  std::size_t subquery;
  std::vector<std::size_t> interference_nodes;
  Vec interference;  // I^t_1 ... I^t_r
  std::vector<ExtractedSymbol> extracted;
};

struct DecodeResult {
  std::vector<Vec> records;  // desired-index order
  std::vector<SubqueryTrace> traces;
};

// Structured decoder: per subquery, solve the interference from the scheme's
// r interference rows, strip it from the remaining answers, then recover each
// desired record from its k fully-retrieved nodes. Throws DecodeFailure.
DecodeResult decode(const QueryPlan& plan, const AnswerSet& answers, const EncodingMatrix& enc);

// Brute-force check of the decodability condition: builds the full linear
// system in the nd + pn*alpha unknowns (answer equations, parity equations
// from a parity check of Psi, code-space equations for each desired record)
// and returns the desired records iff it has a unique solution. Throws
// NotDecodable otherwise.
std::vector<Vec> decodability_oracle(const QueryPlan& plan, const AnswerSet& answers,
                                     const EncodingMatrix& enc);

using QueryAssembler = std::function<Mat(const RetrievalPattern&, std::size_t node, const Mat& u,
                                         std::span<const std::size_t> desired, std::size_t m)>;

struct PrivacyOptions {
  std::size_t enumeration_limit = 1'000'000;
  bool sampled = false;        // fall back to sampling past the limit
  std::size_t samples = 10'000;
  std::uint64_t seed = 1;
  QueryAssembler assembler;    // defaults to assemble_query
};

// True iff U -> Q^node is a bijection on d x m*alpha matrices for every
// p-subset of [m]. Exhaustive when q^(d*m*alpha) <= enumeration_limit; in
// sampled mode it checks Q^node - offset(F) = U for random (U, F) pairs.
bool privacy_bijection_check(const RetrievalPattern& pattern, std::size_t node, std::size_t m,
                             const PrimeField& field, const PrivacyOptions& options = {});

struct Metrics {
  Rational so;
  Rational cpop;
  Rational rr;
};

// SO = n alpha / ell, cPoP = d n / (p ell), RR = r / alpha.
Metrics metrics(const CodeParams& params, std::size_t d, std::size_t p);

struct TradeoffResult {
  bool bound_holds;   // p k alpha <= (n - r) d
  Rational identity;  // cPoP (n - r) / (k SO)
};

TradeoffResult tradeoff_check(const CodeParams& params, std::size_t d, std::size_t p);

}  // namespace pmpir
