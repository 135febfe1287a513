#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmpir/field.hpp"
#include "pmpir/linalg.hpp"
#include "pmpir/pmcode.hpp"
#include "pmpir/rational.hpp"

namespace pmpir {

// m records of exactly ell symbols each.
struct Database {
  PrimeField field;
  std::vector<Vec> records;

  std::size_t m() const noexcept { return records.size(); }
};

// Builds a database from raw integer records. With `stripe`, a record longer
// than ell is split into ceil(len/ell) consecutive records and the last chunk
// is zero-padded; shorter records are zero-padded. Without `stripe`, every
// record must already have exactly ell symbols.
Database make_database(const PrimeField& field,
                       const std::vector<std::vector<std::int64_t>>& raw, std::size_t ell,
                       bool stripe = true);

Database random_database(const PrimeField& field, std::size_t m, std::size_t ell, Rng& rng);

// {"q": int, "records": [[int, ...], ...]}. "q" may be omitted, in which case
// the returned modulus is empty and the caller picks one.
struct DatabaseDocument {
  std::optional<Residue> q;
  std::vector<std::vector<std::int64_t>> records;
};
DatabaseDocument parse_database_json(const std::string& text);
std::string database_to_json(const Database& db);

struct RepairReport {
  std::size_t node = 0;
  std::vector<std::size_t> helpers;
  std::uint64_t symbols_downloaded = 0;   // m * r
  std::uint64_t per_helper_symbols = 0;   // beta * m
  std::uint64_t node_symbols = 0;         // m * alpha restored

  Rational repair_ratio() const {
    return {static_cast<std::int64_t>(symbols_downloaded), static_cast<std::int64_t>(node_symbols)};
  }
};

// C = [Psi M^1 ... Psi M^m]: node i holds row i, m*alpha symbols.
class EncodedDatabase {
 public:
  static EncodedDatabase ingest(const Database& db, const EncodingMatrix& enc);

  // Rebuilds a store from persisted parts. Alive rows must lie in the code
  // space of Psi; dead rows must be zero.
  static EncodedDatabase from_parts(const EncodingMatrix& enc, std::size_t m,
                                    std::vector<Vec> node_rows, std::vector<bool> alive);

  const CodeParams& params() const noexcept { return enc_.params; }
  const EncodingMatrix& encoding() const noexcept { return enc_; }
  const PrimeField& field() const noexcept { return enc_.field; }
  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return enc_.params.n; }

  bool alive(std::size_t node) const;
  std::size_t alive_count() const noexcept;
  // Throws NodeUnavailable for dead nodes.
  const Vec& node_row(std::size_t node) const;
  // Node `node`'s alpha-symbol share of record `record`.
  Vec share(std::size_t node, std::size_t record) const;
  // Row storage including dead (zeroed) nodes, for serialization.
  const std::vector<Vec>& raw_rows() const noexcept { return rows_; }
  const std::vector<bool>& liveness() const noexcept { return alive_; }

  // Plaintext message matrix [M^1 ... M^m] (r x m*alpha). Present only for
  // stores built by ingest(); never serialized.
  const std::optional<Mat>& message() const noexcept { return message_; }

  void fail_node(std::size_t node);
  // Default helpers: the r lowest-index alive nodes other than `node`.
  RepairReport repair_node(std::size_t node,
                           std::optional<std::vector<std::size_t>> helpers = std::nullopt);
  std::vector<std::size_t> default_helpers(std::size_t node) const;

  // Throws Error if an alive row differs from Psi_i * M (when M is retained)
  // or leaves the code space of Psi.
  void check_consistency() const;

 private:
  EncodedDatabase(EncodingMatrix enc, std::size_t m) : enc_(std::move(enc)), m_(m) {}

  EncodingMatrix enc_;
  std::size_t m_;
  std::vector<Vec> rows_;
  std::vector<bool> alive_;
  std::optional<Mat> message_;
};

// Binary store format, all integers little-endian:
//   "PMPIR1"
//   u64 family (0 = MSR, 1 = MBR), n, k, r, alpha, beta, ell, m, q
//   u64 Psi entries, row-major (n * r)
//   u64 node-row symbols, node order (n * m * alpha)
//   liveness bitmap, ceil(n / 8) bytes, node i at bit (i % 8) of byte i / 8
//   u32 CRC-32 of every preceding byte
std::vector<std::uint8_t> serialize(const EncodedDatabase& edb);
EncodedDatabase deserialize(std::span<const std::uint8_t> bytes);

void write_store(const std::string& path, const EncodedDatabase& edb);
EncodedDatabase read_store(const std::string& path);

}  // namespace pmpir
