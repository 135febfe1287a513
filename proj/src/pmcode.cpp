#include "pmpir/pmcode.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "pmpir/combinatorics.hpp"
#include "pmpir/error.hpp"

namespace pmpir {

namespace {

constexpr std::size_t kExhaustiveSubsetLimit = 12;
constexpr std::size_t kSampledSubsets = 500;
constexpr std::uint64_t kSubsetSampleSeed = 0x5eed5eedULL;

std::vector<std::size_t> random_subset(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

// True iff every `size`-row submatrix of m has full rank `size`. Exhaustive
// for small m, otherwise a fixed-seed sample.
bool all_row_subsets_independent(const Mat& m, std::size_t size) {
  const auto independent = [&](const std::vector<std::size_t>& rows) {
    return rank(m.select_rows(rows)) == size;
  };
  if (m.rows() <= kExhaustiveSubsetLimit) {
    return for_each_combination(m.rows(), size, independent);
  }
  Rng rng(kSubsetSampleSeed);
  for (std::size_t s = 0; s < kSampledSubsets; ++s) {
    if (!independent(random_subset(rng, m.rows(), size))) return false;
  }
  return true;
}

void check_and_flag(EncodingMatrix& enc) {
  const CodeParams& p = enc.params;
  if (!all_row_subsets_independent(enc.psi, p.r)) {
    throw InvalidParameters("encoding matrix: some " + std::to_string(p.r) +
                            " rows of Psi are linearly dependent");
  }
  const std::size_t phi_rows = p.family == CodeFamily::MSR ? p.k - 1 : p.k;
  if (!all_row_subsets_independent(enc.phi, phi_rows)) {
    throw InvalidParameters("encoding matrix: some " + std::to_string(phi_rows) +
                            " rows of Phi are linearly dependent");
  }
  if (p.family == CodeFamily::MBR) {
    enc.repair_capable = true;
    enc.repair_note.clear();
    return;
  }
  std::set<Residue> seen;
  for (std::size_t i = 0; i < enc.lambda.size(); ++i) {
    if (!seen.insert(enc.lambda[i].value()).second) {
      enc.repair_capable = false;
      enc.repair_note = "Lambda-distinctness condition fails: the diagonal entries of Lambda "
                        "are not pairwise distinct (value " +
                        std::to_string(enc.lambda[i].value()) + " repeats at node " +
                        std::to_string(i + 1) + ")";
      return;
    }
  }
  enc.repair_capable = true;
  enc.repair_note.clear();
}

// Fills the upper triangle of an s x s block at (r0, c0) row-major from
// record[pos...], mirroring below the diagonal.
void fill_symmetric(Mat& m, std::size_t r0, std::size_t c0, std::size_t s,
                    std::span<const FieldElement> record, std::size_t& pos) {
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = i; j < s; ++j) {
      m.set(r0 + i, c0 + j, record[pos]);
      m.set(r0 + j, c0 + i, record[pos]);
      ++pos;
    }
  }
}

void read_upper(const Mat& m, std::size_t r0, std::size_t c0, std::size_t s, Vec& out) {
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i; j < s; ++j) out.push_back(m.at(r0 + i, c0 + j));
}

}  // namespace

std::string to_string(CodeFamily family) {
  return family == CodeFamily::MSR ? "MSR" : "MBR";
}

std::string CodeParams::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(k) + "," + std::to_string(r) + "," +
         std::to_string(alpha) + "," + std::to_string(beta) + "," + std::to_string(ell) + ")";
}

std::size_t storage_bound(const CodeParams& p) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < p.k; ++i) {
    const std::size_t repair = p.r > i ? (p.r - i) * p.beta : 0;
    total += std::min(p.alpha, repair);
  }
  return total;
}

void CodeParams::validate() const {
  const auto fail = [&](const std::string& why) {
    throw InvalidParameters(to_string(family) + " parameters " + str() + ": " + why);
  };
  if (k == 0) fail("k must be positive");
  if (family == CodeFamily::MSR) {
    if (k < 2) fail("MSR requires k >= 2");
    if (r != 2 * k - 2) fail("MSR requires r = 2k-2");
    if (alpha != k - 1) fail("MSR requires alpha = k-1");
    if (beta != 1) fail("MSR requires beta = 1");
    if (ell != k * (k - 1)) fail("MSR requires ell = k(k-1)");
  } else {
    if (r < k) fail("MBR requires k <= r");
    if (alpha != r) fail("MBR requires alpha = r");
    if (beta != 1) fail("MBR requires beta = 1");
    if (2 * ell != k * (2 * r - k + 1)) fail("MBR requires ell = k(2r-k+1)/2");
  }
  if (n <= r) fail("requires n > r (n = " + std::to_string(n) + ", r = " + std::to_string(r) + ")");
  if (ell > storage_bound(*this)) fail("ell exceeds the regenerating-code storage bound");
}

CodeParams derive_params(CodeFamily family, std::size_t k, std::optional<std::size_t> r,
                         std::size_t n) {
  CodeParams p;
  p.family = family;
  p.n = n;
  p.k = k;
  p.beta = 1;
  if (family == CodeFamily::MSR) {
    if (k < 2) throw InvalidParameters("MSR requires k >= 2");
    p.r = 2 * k - 2;
    p.alpha = k - 1;
    p.ell = k * (k - 1);
  } else {
    if (!r) throw InvalidParameters("MBR requires an explicit r with k <= r < n");
    if (*r < k) {
      throw InvalidParameters("MBR requires k <= r (k = " + std::to_string(k) +
                              ", r = " + std::to_string(*r) + ")");
    }
    p.r = *r;
    p.alpha = *r;
    p.ell = k * (2 * *r - k + 1) / 2;
  }
  p.validate();
  return p;
}

std::pair<std::size_t, std::size_t> msr_point(std::size_t ell, std::size_t k, std::size_t r) {
  if (k == 0 || r < k) throw InvalidParameters("msr_point requires 0 < k <= r");
  const std::size_t beta_den = k * (r - k + 1);
  if (ell % k != 0 || ell % beta_den != 0) {
    throw InvalidParameters("msr_point: (ell/k, ell/(k(r-k+1))) is not integral for ell = " +
                            std::to_string(ell));
  }
  return {ell / k, ell / beta_den};
}

std::pair<std::size_t, std::size_t> mbr_point(std::size_t ell, std::size_t k, std::size_t r) {
  if (k == 0 || r < k) throw InvalidParameters("mbr_point requires 0 < k <= r");
  const std::size_t den = k * (2 * r - k + 1);
  if ((2 * ell) % den != 0 || (2 * r * ell) % den != 0) {
    throw InvalidParameters("mbr_point: (2r ell, 2 ell)/(k(2r-k+1)) is not integral for ell = " +
                            std::to_string(ell));
  }
  return {2 * r * ell / den, 2 * ell / den};
}

EncodingMatrix build_encoding_matrix(const CodeParams& params, const PrimeField& field,
                                     std::optional<std::vector<FieldElement>> xs) {
  params.validate();
  if (field.modulus() <= params.n) {
    throw InvalidParameters("field size q = " + std::to_string(field.modulus()) +
                            " must exceed n = " + std::to_string(params.n));
  }
  std::vector<FieldElement> points;
  if (xs) {
    if (xs->size() != params.n) {
      throw InvalidParameters("expected " + std::to_string(params.n) + " evaluation points");
    }
    for (const auto& x : *xs) {
      if (x.modulus() != field.modulus()) throw FieldMismatch("evaluation point from another field");
    }
    points = *xs;
  } else {
    for (std::size_t i = 1; i <= params.n; ++i) points.push_back(field.element(static_cast<std::int64_t>(i)));
  }
  EncodingMatrix enc = encoding_from_psi(params, vandermonde(points, params.r));
  enc.xs = std::move(points);
  return enc;
}

EncodingMatrix encoding_from_psi(const CodeParams& params, const Mat& psi) {
  params.validate();
  if (psi.rows() != params.n || psi.cols() != params.r) {
    throw ShapeMismatch("Psi must be " + std::to_string(params.n) + "x" +
                        std::to_string(params.r));
  }
  const PrimeField field = psi.field();
  EncodingMatrix enc{params, field, psi, Mat(field, 0, 0), {}, Mat(field, params.n, 0), {}, false, {}};
  if (params.family == CodeFamily::MSR) {
    const std::size_t a = params.alpha;
    enc.phi = psi.block(0, 0, params.n, a);
    for (std::size_t i = 0; i < params.n; ++i) {
      std::size_t lead = 0;
      while (lead < a && psi.raw(i, lead) == 0) ++lead;
      if (lead == a) {
        throw InvalidParameters("encoding matrix: row " + std::to_string(i + 1) +
                                " of Phi is zero");
      }
      const FieldElement lam = psi.at(i, a + lead) / psi.at(i, lead);
      for (std::size_t j = 0; j < a; ++j) {
        if (!(psi.at(i, a + j) == lam * psi.at(i, j))) {
          throw InvalidParameters("encoding matrix: row " + std::to_string(i + 1) +
                                  " is not of the form [phi, lambda*phi]");
        }
      }
      enc.lambda.push_back(lam);
    }
  } else {
    enc.phi = psi.block(0, 0, params.n, params.k);
    enc.delta = psi.block(0, params.k, params.n, params.r - params.k);
  }
  // Recognise a Vandermonde Psi so the evaluation points survive a reload.
  if (params.r >= 2) {
    const Vec xs = psi.col(1);
    std::set<Residue> seen;
    for (const auto& x : xs) seen.insert(x.value());
    if (seen.size() == xs.size() && vandermonde(xs, params.r) == psi) enc.xs = xs;
  }
  check_and_flag(enc);
  return enc;
}

Residue default_modulus(const CodeParams& params) {
  params.validate();
  Residue q = params.family == CodeFamily::MSR
                  ? next_prime_above(static_cast<std::uint64_t>(params.n) * params.n)
                  : next_prime_above(params.n);
  if (params.family == CodeFamily::MBR) return q;
  while (true) {
    if (q > PrimeField::kMaxModulus) {
      throw InvalidParameters("no modulus below 2^31-1 gives distinct Lambda entries");
    }
    const PrimeField f(q);
    std::set<Residue> seen;
    bool distinct = true;
    for (std::size_t x = 1; x <= params.n && distinct; ++x) {
      distinct = seen.insert(f.pow(x, params.alpha)).second;
    }
    if (distinct) return q;
    q = next_prime_above(q);
  }
}

MessageMatrix pack_message(std::span<const FieldElement> record, const CodeParams& params) {
  if (record.size() != params.ell) {
    throw InvalidParameters("record has " + std::to_string(record.size()) +
                            " symbols, expected ell = " + std::to_string(params.ell));
  }
  const PrimeField f = record[0].field();
  std::size_t pos = 0;
  if (params.family == CodeFamily::MSR) {
    const std::size_t a = params.alpha;
    Mat m(f, 2 * a, a);
    fill_symmetric(m, 0, 0, a, record, pos);
    fill_symmetric(m, a, 0, a, record, pos);
    return {std::move(m), CodeFamily::MSR};
  }
  const std::size_t k = params.k;
  const std::size_t r = params.r;
  Mat m(f, r, r);
  fill_symmetric(m, 0, 0, k, record, pos);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = k; j < r; ++j) {
      m.set(i, j, record[pos]);
      m.set(j, i, record[pos]);
      ++pos;
    }
  }
  return {std::move(m), CodeFamily::MBR};
}

Vec unpack_message(const MessageMatrix& message, const CodeParams& params) {
  const Mat& m = message.m;
  if (message.family != params.family) throw InvalidParameters("message family mismatch");
  Vec out;
  out.reserve(params.ell);
  if (params.family == CodeFamily::MSR) {
    const std::size_t a = params.alpha;
    if (m.rows() != 2 * a || m.cols() != a) throw ShapeMismatch("MSR message must be 2a x a");
    const Mat s1 = m.block(0, 0, a, a);
    const Mat s2 = m.block(a, 0, a, a);
    if (!s1.is_symmetric() || !s2.is_symmetric()) {
      throw InvalidParameters("MSR message blocks S1, S2 must be symmetric");
    }
    read_upper(s1, 0, 0, a, out);
    read_upper(s2, 0, 0, a, out);
    return out;
  }
  const std::size_t k = params.k;
  const std::size_t r = params.r;
  if (m.rows() != r || m.cols() != r) throw ShapeMismatch("MBR message must be r x r");
  if (!m.is_symmetric()) throw InvalidParameters("MBR message matrix must be symmetric");
  if (!m.block(k, k, r - k, r - k).is_zero()) {
    throw InvalidParameters("MBR message matrix must have a zero lower-right block");
  }
  read_upper(m, 0, 0, k, out);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = k; j < r; ++j) out.push_back(m.at(i, j));
  return out;
}

Mat encode(const EncodingMatrix& enc, const MessageMatrix& message) {
  if (message.family != enc.params.family) throw InvalidParameters("message family mismatch");
  if (message.m.rows() != enc.params.r || message.m.cols() != enc.params.alpha) {
    throw ShapeMismatch("message matrix must be r x alpha");
  }
  return enc.psi * message.m;
}

Mat encode_record(const EncodingMatrix& enc, std::span<const FieldElement> record) {
  return encode(enc, pack_message(record, enc.params));
}

Mat generator_matrix(const EncodingMatrix& enc) {
  const CodeParams& p = enc.params;
  Mat g(enc.field, p.n * p.alpha, p.ell);
  Vec unit = zero_vec(enc.field, p.ell);
  for (std::size_t t = 0; t < p.ell; ++t) {
    unit[t] = enc.field.one();
    const Mat c = encode_record(enc, unit);
    for (std::size_t i = 0; i < p.n; ++i)
      for (std::size_t b = 0; b < p.alpha; ++b) g.raw(i * p.alpha + b, t) = c.raw(i, b);
    unit[t] = enc.field.zero();
  }
  return g;
}

Vec recover(const EncodingMatrix& enc, std::span<const NodeShare> shares) {
  const CodeParams& p = enc.params;
  if (shares.size() < p.k) {
    throw RecoveryFailure("recover needs at least k = " + std::to_string(p.k) +
                          " node shares, got " + std::to_string(shares.size()));
  }
  std::set<std::size_t> nodes;
  std::vector<std::size_t> rows;
  Vec y;
  for (const auto& s : shares) {
    if (s.node >= p.n) throw RecoveryFailure("node index out of range");
    if (!nodes.insert(s.node).second) throw RecoveryFailure("duplicate node in recovery set");
    if (s.symbols.size() != p.alpha) throw ShapeMismatch("node share must hold alpha symbols");
    for (std::size_t b = 0; b < p.alpha; ++b) {
      rows.push_back(s.node * p.alpha + b);
      y.push_back(s.symbols[b]);
    }
  }
  const Mat system = generator_matrix(enc).select_rows(rows);
  try {
    return solve(system, y);
  } catch (const InconsistentSystem& e) {
    throw RecoveryFailure(std::string("node shares are inconsistent (corrupt data): ") + e.what());
  } catch (const RankDeficient& e) {
    throw RecoveryFailure(std::string("node shares do not determine the record: ") + e.what());
  }
}

Vec repair_target(const EncodingMatrix& enc, std::size_t failed) {
  if (failed >= enc.params.n) throw InvalidParameters("failed node index out of range");
  return enc.params.family == CodeFamily::MSR ? enc.phi.row(failed) : enc.psi.row(failed);
}

FieldElement repair_projection(std::span<const FieldElement> helper_row,
                               std::span<const FieldElement> target) {
  if (helper_row.size() != target.size()) {
    throw ShapeMismatch("repair_projection: helper row has " + std::to_string(helper_row.size()) +
                        " symbols, target has " + std::to_string(target.size()));
  }
  return dot(helper_row, target);
}

Vec repair_reconstruct(const EncodingMatrix& enc, std::size_t failed,
                       std::span<const HelperSymbol> projections) {
  const CodeParams& p = enc.params;
  if (!enc.repair_capable) throw RepairUnavailable("repair unavailable: " + enc.repair_note);
  if (failed >= p.n) throw InvalidParameters("failed node index out of range");
  if (projections.size() != p.r) {
    throw InvalidParameters("repair needs exactly r = " + std::to_string(p.r) +
                            " helpers, got " + std::to_string(projections.size()));
  }
  std::set<std::size_t> seen;
  std::vector<std::size_t> helpers;
  Vec y;
  for (const auto& h : projections) {
    if (h.helper >= p.n) throw InvalidParameters("helper index out of range");
    if (h.helper == failed) throw InvalidParameters("failed node cannot be its own helper");
    if (!seen.insert(h.helper).second) throw InvalidParameters("duplicate repair helper");
    helpers.push_back(h.helper);
    y.push_back(h.symbol);
  }
  // Psi_helpers * (M t^T) = projections; any r rows of Psi are invertible.
  const Vec mt = solve(enc.psi.select_rows(helpers), y);
  if (p.family == CodeFamily::MBR) return mt;
  Vec row;
  row.reserve(p.alpha);
  const FieldElement lam = enc.lambda[failed];
  for (std::size_t b = 0; b < p.alpha; ++b) row.push_back(mt[b] + lam * mt[p.alpha + b]);
  return row;
}

}  // namespace pmpir
