#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmpir/field.hpp"
#include "pmpir/linalg.hpp"

namespace pmpir {

enum class CodeFamily { MSR, MBR };

std::string to_string(CodeFamily family);

// (n, k, r, alpha, beta, ell) of a regenerating code. `r` is the number of
// repair helpers and `ell` the per-record size.
struct CodeParams {
  CodeFamily family = CodeFamily::MSR;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t r = 0;
  std::size_t alpha = 0;
  std::size_t beta = 0;
  std::size_t ell = 0;

  // Throws InvalidParameters naming the first violated constraint.
  void validate() const;
  std::string str() const;

  friend bool operator==(const CodeParams&, const CodeParams&) = default;
};

// Sum_{i<k} min(alpha, (r - i) beta): the upper bound on ell.
std::size_t storage_bound(const CodeParams& params);

// MSR ignores `r` (it is fixed to 2k-2). MBR requires k <= r < n.
CodeParams derive_params(CodeFamily family, std::size_t k, std::optional<std::size_t> r,
                         std::size_t n);

// (alpha, beta) at the minimum-storage point for record size ell.
std::pair<std::size_t, std::size_t> msr_point(std::size_t ell, std::size_t k, std::size_t r);
// (alpha, beta) at the minimum-bandwidth point for record size ell.
std::pair<std::size_t, std::size_t> mbr_point(std::size_t ell, std::size_t k, std::size_t r);

// Psi = [Phi  Lambda*Phi] (MSR) or [Phi  Delta] (MBR).
struct EncodingMatrix {
  CodeParams params;
  PrimeField field;
  Mat psi;
  Mat phi;
  Vec lambda;  // MSR diagonal of Lambda; empty for MBR
  Mat delta;   // MBR only; n x 0 for MSR
  std::vector<FieldElement> xs;  // evaluation points, when Psi is Vandermonde
  bool repair_capable = false;
  std::string repair_note;  // names the failed condition when !repair_capable
};

// Builds Psi = vandermonde(xs, r) with xs defaulting to (1, ..., n), then runs
// the structural checks. Throws when q <= n, xs repeat, or any r rows of Psi
// (or the required rows of Phi) are dependent. Colliding Lambda entries only
// clear repair_capable.
EncodingMatrix build_encoding_matrix(const CodeParams& params, const PrimeField& field,
                                     std::optional<std::vector<FieldElement>> xs = std::nullopt);

// Rebuilds the decomposition from a stored Psi and reruns the same checks.
EncodingMatrix encoding_from_psi(const CodeParams& params, const Mat& psi);

// Default modulus: smallest prime > n^2 (MSR) or > n (MBR), advanced until the
// Lambda entries x^alpha of xs = 1..n are pairwise distinct.
Residue default_modulus(const CodeParams& params);

struct MessageMatrix {
  Mat m;
  CodeFamily family;
};

MessageMatrix pack_message(std::span<const FieldElement> record, const CodeParams& params);
Vec unpack_message(const MessageMatrix& message, const CodeParams& params);

// C = Psi * M, n x alpha.
Mat encode(const EncodingMatrix& enc, const MessageMatrix& message);
Mat encode_record(const EncodingMatrix& enc, std::span<const FieldElement> record);

// Linear map from the ell free record symbols to the flattened n*alpha code
// matrix (row index node*alpha + symbol).
Mat generator_matrix(const EncodingMatrix& enc);

struct NodeShare {
  std::size_t node;
  Vec symbols;  // alpha symbols of one record
};

// Recovers a record from the shares of at least k distinct nodes by solving
// for the ell free message symbols. Throws RecoveryFailure when the rows are
// inconsistent or do not determine the record.
Vec recover(const EncodingMatrix& enc, std::span<const NodeShare> shares);

// Vector a helper projects its share onto when node `failed` is rebuilt:
// row `failed` of Phi (MSR) or of Psi (MBR).
Vec repair_target(const EncodingMatrix& enc, std::size_t failed);

FieldElement repair_projection(std::span<const FieldElement> helper_row,
                               std::span<const FieldElement> target);

struct HelperSymbol {
  std::size_t helper;
  FieldElement symbol;
};

// Exact repair of node `failed` for one record from r helper projections.
Vec repair_reconstruct(const EncodingMatrix& enc, std::size_t failed,
                       std::span<const HelperSymbol> projections);

}  // namespace pmpir
