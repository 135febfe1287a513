#include "pmpir/dbstore.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>
#include <json.hpp>
#include <set>

#include "pmpir/error.hpp"

namespace pmpir {

namespace {

constexpr char kMagic[] = "PMPIR";
constexpr char kVersion = '1';
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kHeaderFields = 9;

class Writer {
 public:
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t bytes, const char* what) const {
    if (in_.size() - pos_ < bytes) {
      throw ParseError(std::string("truncated store: expected ") + what, pos_);
    }
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::size_t pos() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

// True iff every column of `rows` lies in the column space of `psi_rows`.
bool in_code_space(const Mat& psi_rows, const Mat& rows) {
  return rank(psi_rows) == rank(psi_rows.hstack(rows));
}

}  // namespace

Database make_database(const PrimeField& field,
                       const std::vector<std::vector<std::int64_t>>& raw, std::size_t ell,
                       bool stripe) {
  if (ell == 0) throw InvalidParameters("record length ell must be positive");
  if (raw.empty()) throw InvalidParameters("database needs at least one record");
  Database db{field, {}};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& rec = raw[i];
    if (!stripe && rec.size() != ell) {
      throw InvalidParameters("record " + std::to_string(i + 1) + " has " +
                              std::to_string(rec.size()) + " symbols, expected ell = " +
                              std::to_string(ell) + " (striping disabled)");
    }
    for (auto v : rec) {
      if (v < 0 || static_cast<std::uint64_t>(v) >= field.modulus()) {
        throw InvalidParameters("record " + std::to_string(i + 1) + " holds value " +
                                std::to_string(v) + " outside [0, q)");
      }
    }
    const std::size_t chunks = rec.empty() ? 1 : (rec.size() + ell - 1) / ell;
    for (std::size_t c = 0; c < chunks; ++c) {
      Vec chunk = zero_vec(field, ell);
      for (std::size_t t = 0; t < ell && c * ell + t < rec.size(); ++t) {
        chunk[t] = field.element(rec[c * ell + t]);
      }
      db.records.push_back(std::move(chunk));
    }
  }
  return db;
}

Database random_database(const PrimeField& field, std::size_t m, std::size_t ell, Rng& rng) {
  Database db{field, {}};
  db.records.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    Vec rec;
    rec.reserve(ell);
    for (std::size_t t = 0; t < ell; ++t) rec.push_back(sample_uniform(rng, field));
    db.records.push_back(std::move(rec));
  }
  return db;
}

DatabaseDocument parse_database_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid database JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array()) {
    throw ParseError("database JSON must be an object with a \"records\" array", 0);
  }
  DatabaseDocument out;
  if (doc.contains("q")) {
    if (!doc["q"].is_number_unsigned()) throw ParseError("\"q\" must be a positive integer", 0);
    out.q = doc["q"].get<Residue>();
  }
  for (const auto& rec : doc["records"]) {
    if (!rec.is_array()) throw ParseError("each record must be an array of integers", 0);
    std::vector<std::int64_t> values;
    for (const auto& v : rec) {
      if (!v.is_number_integer()) throw ParseError("record entries must be integers", 0);
      values.push_back(v.get<std::int64_t>());
    }
    out.records.push_back(std::move(values));
  }
  return out;
}

std::string database_to_json(const Database& db) {
  nlohmann::json doc;
  doc["q"] = db.field.modulus();
  doc["records"] = nlohmann::json::array();
  for (const auto& rec : db.records) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& x : rec) row.push_back(x.value());
    doc["records"].push_back(row);
  }
  return doc.dump();
}

EncodedDatabase EncodedDatabase::ingest(const Database& db, const EncodingMatrix& enc) {
  const CodeParams& p = enc.params;
  if (!(db.field == enc.field)) {
    throw FieldMismatch("database modulus " + std::to_string(db.field.modulus()) +
                        " differs from encoding modulus " + std::to_string(enc.field.modulus()));
  }
  if (db.records.empty()) throw InvalidParameters("database needs at least one record");
  const std::size_t m = db.records.size();
  Mat message(enc.field, p.r, m * p.alpha);
  for (std::size_t j = 0; j < m; ++j) {
    if (db.records[j].size() != p.ell) {
      throw InvalidParameters("record " + std::to_string(j + 1) + " is not ell = " +
                              std::to_string(p.ell) + " symbols long");
    }
    const Mat mj = pack_message(db.records[j], p).m;
    for (std::size_t i = 0; i < p.r; ++i)
      for (std::size_t b = 0; b < p.alpha; ++b) message.raw(i, j * p.alpha + b) = mj.raw(i, b);
  }
  const Mat c = enc.psi * message;
  EncodedDatabase edb(enc, m);
  edb.rows_.reserve(p.n);
  for (std::size_t i = 0; i < p.n; ++i) edb.rows_.push_back(c.row(i));
  edb.alive_.assign(p.n, true);
  edb.message_ = message;
  return edb;
}

EncodedDatabase EncodedDatabase::from_parts(const EncodingMatrix& enc, std::size_t m,
                                            std::vector<Vec> node_rows, std::vector<bool> alive) {
  const CodeParams& p = enc.params;
  if (m == 0) throw InvalidParameters("store needs at least one record");
  if (node_rows.size() != p.n || alive.size() != p.n) {
    throw ShapeMismatch("store must hold exactly n node rows");
  }
  for (std::size_t i = 0; i < p.n; ++i) {
    if (node_rows[i].size() != m * p.alpha) throw ShapeMismatch("node row length != m*alpha");
    if (!alive[i]) {
      for (const auto& x : node_rows[i]) {
        if (!x.is_zero()) throw InvalidParameters("dead node " + std::to_string(i + 1) + " has data");
      }
    }
  }
  EncodedDatabase edb(enc, m);
  edb.rows_ = std::move(node_rows);
  edb.alive_ = std::move(alive);
  edb.check_consistency();
  return edb;
}

bool EncodedDatabase::alive(std::size_t node) const {
  if (node >= alive_.size()) throw InvalidParameters("node index " + std::to_string(node + 1) + " out of range");
  return alive_[node];
}

std::size_t EncodedDatabase::alive_count() const noexcept {
  std::size_t c = 0;
  for (bool a : alive_) c += a ? 1 : 0;
  return c;
}

const Vec& EncodedDatabase::node_row(std::size_t node) const {
  if (!alive(node)) throw NodeUnavailable("node " + std::to_string(node + 1) + " is failed");
  return rows_[node];
}

Vec EncodedDatabase::share(std::size_t node, std::size_t record) const {
  if (record >= m_) throw InvalidParameters("record index out of range");
  const Vec& row = node_row(node);
  const std::size_t a = enc_.params.alpha;
  return Vec(row.begin() + static_cast<std::ptrdiff_t>(record * a),
             row.begin() + static_cast<std::ptrdiff_t>((record + 1) * a));
}

void EncodedDatabase::fail_node(std::size_t node) {
  if (!alive(node)) throw NodeUnavailable("node " + std::to_string(node + 1) + " is already failed");
  alive_[node] = false;
  rows_[node] = zero_vec(enc_.field, m_ * enc_.params.alpha);
}

std::vector<std::size_t> EncodedDatabase::default_helpers(std::size_t node) const {
  std::vector<std::size_t> helpers;
  for (std::size_t i = 0; i < n() && helpers.size() < enc_.params.r; ++i) {
    if (i != node && alive_[i]) helpers.push_back(i);
  }
  if (helpers.size() < enc_.params.r) {
    throw RepairUnavailable("insufficient helpers: " + std::to_string(helpers.size()) +
                            " alive nodes available, repair needs r = " +
                            std::to_string(enc_.params.r));
  }
  return helpers;
}

RepairReport EncodedDatabase::repair_node(std::size_t node,
                                          std::optional<std::vector<std::size_t>> helpers) {
  const CodeParams& p = enc_.params;
  if (alive(node)) throw InvalidParameters("node " + std::to_string(node + 1) + " is not failed");
  if (!enc_.repair_capable) throw RepairUnavailable("repair unavailable: " + enc_.repair_note);
  const std::vector<std::size_t> chosen = helpers ? *helpers : default_helpers(node);
  if (chosen.size() != p.r) {
    throw InvalidParameters("repair needs exactly r = " + std::to_string(p.r) + " helpers, got " +
                            std::to_string(chosen.size()));
  }
  std::set<std::size_t> distinct(chosen.begin(), chosen.end());
  if (distinct.size() != chosen.size()) throw InvalidParameters("duplicate repair helper");
  for (auto h : chosen) {
    if (h == node) throw InvalidParameters("failed node cannot be its own helper");
    if (!alive(h)) throw NodeUnavailable("helper node " + std::to_string(h + 1) + " is failed");
  }

  RepairReport report;
  report.node = node;
  report.helpers = chosen;
  const Vec target = repair_target(enc_, node);
  Vec restored;
  restored.reserve(m_ * p.alpha);
  for (std::size_t j = 0; j < m_; ++j) {
    std::vector<HelperSymbol> projections;
    projections.reserve(p.r);
    for (auto h : chosen) {
      projections.push_back({h, repair_projection(share(h, j), target)});
      report.symbols_downloaded += p.beta;
    }
    const Vec part = repair_reconstruct(enc_, node, projections);
    restored.insert(restored.end(), part.begin(), part.end());
  }
  report.per_helper_symbols = p.beta * m_;
  report.node_symbols = m_ * p.alpha;
  rows_[node] = std::move(restored);
  alive_[node] = true;
  check_consistency();
  return report;
}

void EncodedDatabase::check_consistency() const {
  const CodeParams& p = enc_.params;
  if (message_) {
    for (std::size_t i = 0; i < p.n; ++i) {
      if (!alive_[i]) continue;
      const Mat expect = enc_.psi.select_rows(std::vector<std::size_t>{i}) * *message_;
      if (!(Mat::row_vector(enc_.field, rows_[i]) == expect)) {
        throw Error("node " + std::to_string(i + 1) + " row differs from Psi_i * M");
      }
    }
    return;
  }
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < p.n; ++i)
    if (alive_[i]) live.push_back(i);
  if (live.empty()) return;
  std::vector<Vec> rows;
  for (auto i : live) rows.push_back(rows_[i]);
  if (!in_code_space(enc_.psi.select_rows(live), Mat::from_rows(enc_.field, rows))) {
    throw Error("alive node rows are not a codeword of Psi (corrupt store)");
  }
}

std::vector<std::uint8_t> serialize(const EncodedDatabase& edb) {
  const CodeParams& p = edb.params();
  Writer w;
  for (std::size_t i = 0; i < kMagicLen - 1; ++i) w.out.push_back(static_cast<std::uint8_t>(kMagic[i]));
  w.out.push_back(static_cast<std::uint8_t>(kVersion));
  w.u64(p.family == CodeFamily::MSR ? 0 : 1);
  for (auto v : {p.n, p.k, p.r, p.alpha, p.beta, p.ell, edb.m()}) w.u64(v);
  w.u64(edb.field().modulus());
  const Mat& psi = edb.encoding().psi;
  for (std::size_t i = 0; i < psi.rows(); ++i)
    for (std::size_t j = 0; j < psi.cols(); ++j) w.u64(psi.raw(i, j));
  for (const auto& row : edb.raw_rows())
    for (const auto& x : row) w.u64(x.value());
  std::vector<std::uint8_t> bitmap((p.n + 7) / 8, 0);
  for (std::size_t i = 0; i < p.n; ++i)
    if (edb.liveness()[i]) bitmap[i / 8] |= static_cast<std::uint8_t>(1U << (i % 8));
  w.out.insert(w.out.end(), bitmap.begin(), bitmap.end());
  w.u32(crc32_of(w.out));
  return std::move(w.out);
}

EncodedDatabase deserialize(std::span<const std::uint8_t> bytes) {
  Reader rd(bytes);
  rd.need(kMagicLen, "magic");
  for (std::size_t i = 0; i < kMagicLen - 1; ++i) {
    if (bytes[i] != static_cast<std::uint8_t>(kMagic[i])) throw ParseError("bad magic: not a PMPIR store", i);
  }
  if (bytes[kMagicLen - 1] != static_cast<std::uint8_t>(kVersion)) {
    throw ParseError(std::string("unsupported store version '") +
                         static_cast<char>(bytes[kMagicLen - 1]) + "', expected '" + kVersion + "'",
                     kMagicLen - 1);
  }
  for (std::size_t i = 0; i < kMagicLen; ++i) rd.u8("magic");

  std::uint64_t h[kHeaderFields];
  for (auto& v : h) v = rd.u64("header field");
  if (h[0] > 1) throw ParseError("unknown code family " + std::to_string(h[0]), kMagicLen);
  const std::size_t q_offset = kMagicLen + 8 * (kHeaderFields - 1);
  if (h[8] > PrimeField::kMaxModulus) {
    throw ParseError("modulus overflow: q = " + std::to_string(h[8]) + " exceeds 2^31-1", q_offset);
  }
  CodeParams p{h[0] == 0 ? CodeFamily::MSR : CodeFamily::MBR, h[1], h[2], h[3], h[4], h[5], h[6]};
  const std::size_t m = h[7];
  std::optional<PrimeField> field;
  try {
    p.validate();
    field.emplace(h[8]);
  } catch (const InvalidParameters& e) {
    throw ParseError(std::string("invalid store header: ") + e.what(), kMagicLen);
  }
  // Guard the allocation against corrupt counts before reading the body.
  if (m == 0) throw ParseError("store declares zero records", kMagicLen + 8 * 7);
  const unsigned __int128 body =
      (static_cast<unsigned __int128>(p.n) * p.r +
       static_cast<unsigned __int128>(p.n) * m * p.alpha) * 8 + (p.n + 7) / 8 + 4;
  if (body > bytes.size() - rd.pos()) {
    throw ParseError("truncated store: body shorter than the header declares", rd.pos());
  }
  const std::size_t end = rd.pos() + static_cast<std::size_t>(body);
  if (end != bytes.size()) throw ParseError("trailing bytes after CRC-32", end);
  const std::size_t crc_at = end - 4;
  const std::uint32_t stored = static_cast<std::uint32_t>(bytes[crc_at]) |
                               static_cast<std::uint32_t>(bytes[crc_at + 1]) << 8 |
                               static_cast<std::uint32_t>(bytes[crc_at + 2]) << 16 |
                               static_cast<std::uint32_t>(bytes[crc_at + 3]) << 24;
  if (stored != crc32_of(bytes.first(crc_at))) throw ParseError("CRC-32 mismatch", crc_at);

  const auto symbol = [&](const char* what) {
    const std::size_t at = rd.pos();
    const std::uint64_t v = rd.u64(what);
    if (v >= field->modulus()) throw ParseError(std::string(what) + " is not a residue below q", at);
    return FieldElement(v, *field);
  };
  Mat psi(*field, p.n, p.r);
  for (std::size_t i = 0; i < p.n; ++i)
    for (std::size_t j = 0; j < p.r; ++j) psi.set(i, j, symbol("Psi entry"));
  std::vector<Vec> rows(p.n);
  for (auto& row : rows) {
    row.reserve(m * p.alpha);
    for (std::size_t s = 0; s < m * p.alpha; ++s) row.push_back(symbol("node symbol"));
  }
  std::vector<bool> alive(p.n);
  for (std::size_t byte = 0; byte < (p.n + 7) / 8; ++byte) {
    const std::uint8_t bits = rd.u8("liveness bitmap");
    for (std::size_t b = 0; b < 8 && byte * 8 + b < p.n; ++b) alive[byte * 8 + b] = (bits >> b) & 1U;
  }

  EncodingMatrix enc = encoding_from_psi(p, psi);
  return EncodedDatabase::from_parts(enc, m, std::move(rows), std::move(alive));
}

void write_store(const std::string& path, const EncodedDatabase& edb) {
  const auto bytes = serialize(edb);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path);
}

EncodedDatabase read_store(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open store " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace pmpir
