#include "pmpir/mpir.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_set>

#include "pmpir/combinatorics.hpp"
#include "pmpir/error.hpp"

namespace pmpir {

std::string to_string(SchemeId scheme) {
  switch (scheme) {
    case SchemeId::MSR_A:
      return "msr-a";
    case SchemeId::MSR_B:
      return "msr-b";
    case SchemeId::MBR:
      return "mbr";
  }
  return "?";
}

SchemeId parse_scheme(const std::string& name) {
  std::string key;
  for (char c : name) key.push_back(c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "msr-a") return SchemeId::MSR_A;
  if (key == "msr-b") return SchemeId::MSR_B;
  if (key == "mbr") return SchemeId::MBR;
  throw InvalidParameters("unknown scheme '" + name + "' (expected msr-a, msr-b or mbr)");
}

CodeFamily family_of(SchemeId scheme) {
  return scheme == SchemeId::MBR ? CodeFamily::MBR : CodeFamily::MSR;
}

namespace {

void check_msr_b_p(std::size_t k, std::size_t p) {
  if (p > 2 * k - 2) {
    throw InvalidParameters("msr-b requires p <= 2k-2 (p = " + std::to_string(p) +
                            ", 2k-2 = " + std::to_string(2 * k - 2) +
                            "); beyond it the scheme still decodes but is not optimal for the "
                            "storage/download trade-off, so it is rejected");
  }
}

std::size_t default_d(SchemeId scheme, const CodeParams& params) {
  return scheme == SchemeId::MSR_B ? params.k : params.alpha;
}

}  // namespace

std::size_t scheme_node_count(SchemeId scheme, std::size_t k, std::size_t p,
                              std::optional<std::size_t> r) {
  switch (scheme) {
    case SchemeId::MSR_A:
      return p * k + 2 * k - 2;
    case SchemeId::MSR_B:
      return (p + 2) * (k - 1);
    case SchemeId::MBR:
      return p * k + r.value_or(k);
  }
  return 0;
}

CodeParams scheme_params(SchemeId scheme, std::size_t k, std::size_t p,
                         std::optional<std::size_t> r) {
  if (p == 0) throw InvalidParameters("p must be at least 1");
  if (scheme != SchemeId::MBR) {
    if (k < 2) throw InvalidParameters("MSR schemes require k >= 2");
    if (r && *r != 2 * k - 2) throw InvalidParameters("MSR schemes fix r = 2k-2");
  }
  if (scheme == SchemeId::MSR_B) check_msr_b_p(k, p);
  const std::optional<std::size_t> mbr_r = scheme == SchemeId::MBR ? std::optional(r.value_or(k)) : std::nullopt;
  return derive_params(family_of(scheme), k, mbr_r, scheme_node_count(scheme, k, p, mbr_r));
}

std::size_t scheme_p_from_params(SchemeId scheme, const CodeParams& params) {
  if (family_of(scheme) != params.family) {
    throw InvalidParameters("scheme " + to_string(scheme) + " needs a " +
                            to_string(family_of(scheme)) + " code, store holds " +
                            to_string(params.family));
  }
  for (std::size_t p = 1; scheme_node_count(scheme, params.k, p, params.r) <= params.n; ++p) {
    if (scheme_node_count(scheme, params.k, p, params.r) == params.n) return p;
  }
  throw InvalidParameters("n = " + std::to_string(params.n) + " matches no p for scheme " +
                          to_string(scheme));
}

std::vector<std::vector<int>> RetrievalPattern::v_matrix(std::size_t node, std::size_t slot) const {
  std::vector<std::vector<int>> v(d, std::vector<int>(alpha, 0));
  for (const auto& s : selections) {
    if (s.node == node && s.slot == slot) v[s.subquery][s.symbol] = 1;
  }
  return v;
}

std::vector<std::size_t> RetrievalPattern::interference_nodes(std::size_t subquery) const {
  std::vector<std::size_t> nodes;
  if (scheme == SchemeId::MSR_B && k > 0) {
    // In group u the node at offset (t + 1) mod k is blank in subquery t.
    for (std::size_t u = 0; u < p; ++u) nodes.push_back(u * k + (subquery + 1) % k);
  }
  for (std::size_t i = p * k; i < n; ++i) nodes.push_back(i);
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

RetrievalPattern make_pattern(SchemeId scheme, const CodeParams& params, std::size_t p) {
  if (family_of(scheme) != params.family) {
    throw InvalidParameters("scheme " + to_string(scheme) + " needs a " +
                            to_string(family_of(scheme)) + " code");
  }
  params.validate();
  RetrievalPattern pat{scheme, params.n, params.k, params.r, params.alpha, p,
                       default_d(scheme, params), {}};
  if (p == 0) return pat;
  if (scheme == SchemeId::MSR_B) check_msr_b_p(params.k, p);
  const std::size_t want = scheme_node_count(scheme, params.k, p, params.r);
  if (params.n != want) {
    throw InvalidParameters(to_string(scheme) + " with k = " + std::to_string(params.k) +
                            ", p = " + std::to_string(p) + " needs n = " + std::to_string(want) +
                            ", got n = " + std::to_string(params.n));
  }
  const std::size_t k = params.k;
  for (std::size_t u = 0; u < p; ++u) {
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t node = u * k + c;
      for (std::size_t b = 0; b < params.alpha; ++b) {
        // MSR_B: [I; 0] at the group's first node, shifted down one row per node.
        const std::size_t t = scheme == SchemeId::MSR_B ? (b + c) % k : b;
        pat.selections.push_back({node, u, t, b});
      }
    }
  }
  return pat;
}

RetrievalPattern truncate_pattern(const RetrievalPattern& pattern, std::size_t d) {
  if (d > pattern.d) throw InvalidParameters("truncate_pattern cannot grow d");
  RetrievalPattern out = pattern;
  out.d = d;
  std::erase_if(out.selections, [d](const Selection& s) { return s.subquery >= d; });
  return out;
}

std::vector<std::vector<int>> label_table(const RetrievalPattern& pattern,
                                          std::span<const std::size_t> desired, std::size_t m) {
  const auto f = normalize_desired(desired, pattern.p, m);
  std::vector<std::vector<int>> grid(m * pattern.alpha, std::vector<int>(pattern.n, 0));
  for (const auto& s : pattern.selections) {
    grid[f[s.slot] * pattern.alpha + s.symbol][s.node] = static_cast<int>(s.subquery) + 1;
  }
  return grid;
}

std::vector<std::size_t> normalize_desired(std::span<const std::size_t> desired, std::size_t p,
                                           std::size_t m) {
  std::vector<std::size_t> f(desired.begin(), desired.end());
  std::sort(f.begin(), f.end());
  if (std::adjacent_find(f.begin(), f.end()) != f.end()) {
    throw InvalidParameters("desired record indices must be distinct");
  }
  if (!f.empty() && f.back() >= m) {
    throw InvalidParameters("desired record " + std::to_string(f.back() + 1) +
                            " exceeds m = " + std::to_string(m));
  }
  if (f.size() != p) {
    throw InvalidParameters("pattern retrieves p = " + std::to_string(p) + " records, " +
                            std::to_string(f.size()) + " requested");
  }
  return f;
}

Mat query_offset(const RetrievalPattern& pattern, std::size_t node,
                 std::span<const std::size_t> desired, std::size_t m, const PrimeField& field) {
  if (desired.size() != pattern.p) throw InvalidParameters("desired set size differs from p");
  Mat off(field, pattern.d, m * pattern.alpha);
  for (const auto& s : pattern.selections) {
    if (s.node != node) continue;
    Residue& cell = off.raw(s.subquery, desired[s.slot] * pattern.alpha + s.symbol);
    cell = field.add(cell, 1 % field.modulus());
  }
  return off;
}

Mat assemble_query(const RetrievalPattern& pattern, std::size_t node, const Mat& u,
                   std::span<const std::size_t> desired, std::size_t m) {
  if (u.rows() != pattern.d || u.cols() != m * pattern.alpha) {
    throw ShapeMismatch("U must be d x m*alpha");
  }
  return u + query_offset(pattern, node, desired, m, u.field());
}

QueryPlan gen_queries(const RetrievalPattern& pattern, std::span<const std::size_t> desired,
                      std::size_t m, const PrimeField& field, std::uint64_t seed) {
  if (m == 0) throw InvalidParameters("database has no records");
  QueryPlan plan{Mat(field, pattern.d, m * pattern.alpha), normalize_desired(desired, pattern.p, m),
                 {}, pattern, m, seed};
  Rng rng(seed);
  for (std::size_t i = 0; i < plan.u.rows(); ++i)
    for (std::size_t j = 0; j < plan.u.cols(); ++j) plan.u.raw(i, j) = field.sample(rng);
  plan.queries.reserve(pattern.n);
  for (std::size_t node = 0; node < pattern.n; ++node) {
    plan.queries.push_back(assemble_query(pattern, node, plan.u, plan.desired, m));
  }
  return plan;
}

Vec answer(std::span<const FieldElement> node_row, const Mat& query) {
  return mat_vec(query, node_row);
}

AnswerSet answer_all(const EncodedDatabase& edb, const QueryPlan& plan) {
  if (plan.pattern.n != edb.n() || plan.m != edb.m()) {
    throw InvalidParameters("query plan does not match the store's n or m");
  }
  AnswerSet out;
  out.answers.reserve(edb.n());
  for (std::size_t i = 0; i < edb.n(); ++i) {
    out.answers.push_back(answer(edb.node_row(i), plan.queries[i]));
    out.downloaded_symbols += out.answers.back().size();
  }
  return out;
}

DecodeResult decode(const QueryPlan& plan, const AnswerSet& answers, const EncodingMatrix& enc) {
  const RetrievalPattern& pat = plan.pattern;
  const CodeParams& params = enc.params;
  if (answers.answers.size() != pat.n || pat.n != params.n) {
    throw DecodeFailure("decode needs all n = " + std::to_string(params.n) + " answers");
  }
  for (const auto& a : answers.answers) {
    if (a.size() != pat.d) throw DecodeFailure("answer length differs from d");
  }
  DecodeResult result;
  // known[slot][node][symbol]
  std::vector<std::map<std::size_t, std::vector<std::optional<FieldElement>>>> known(pat.p);
  for (std::size_t t = 0; t < pat.d; ++t) {
    SubqueryTrace trace{t, pat.interference_nodes(t), {}, {}};
    for (const auto& s : pat.selections) {
      if (s.subquery == t &&
          std::binary_search(trace.interference_nodes.begin(), trace.interference_nodes.end(), s.node)) {
        throw DecodeFailure("interference node " + std::to_string(s.node + 1) +
                            " also carries a retrieved symbol");
      }
    }
    Vec rhs;
    for (auto i : trace.interference_nodes) rhs.push_back(answers.answers[i][t]);
    try {
      trace.interference = solve(enc.psi.select_rows(trace.interference_nodes), rhs);
    } catch (const Error& e) {
      throw DecodeFailure(std::string("interference submatrix of Psi is singular (corrupt encoding): ") +
                          e.what());
    }
    for (const auto& s : pat.selections) {
      if (s.subquery != t) continue;
      const FieldElement value = answers.answers[s.node][t] - dot(enc.psi.row(s.node), trace.interference);
      auto& slot_nodes = known[s.slot];
      auto& syms = slot_nodes.try_emplace(s.node, params.alpha).first->second;
      syms[s.symbol] = value;
      const std::size_t record = plan.desired[s.slot];
      trace.extracted.push_back({s.slot, record, s.node, s.symbol, record * params.alpha + s.symbol, value});
    }
    result.traces.push_back(std::move(trace));
  }
  for (std::size_t u = 0; u < pat.p; ++u) {
    std::vector<NodeShare> shares;
    for (const auto& [node, syms] : known[u]) {
      if (std::all_of(syms.begin(), syms.end(), [](const auto& x) { return x.has_value(); })) {
        Vec row;
        for (const auto& x : syms) row.push_back(*x);
        shares.push_back({node, std::move(row)});
      }
    }
    try {
      result.records.push_back(recover(enc, shares));
    } catch (const Error& e) {
      throw DecodeFailure("record " + std::to_string(plan.desired[u] + 1) + ": " + e.what());
    }
  }
  return result;
}

std::vector<Vec> decodability_oracle(const QueryPlan& plan, const AnswerSet& answers,
                                     const EncodingMatrix& enc) {
  const RetrievalPattern& pat = plan.pattern;
  const CodeParams& params = enc.params;
  const PrimeField& f = enc.field;
  const std::size_t n = params.n;
  const std::size_t d = pat.d;
  const std::size_t p = pat.p;
  const std::size_t a = params.alpha;
  if (answers.answers.size() != n || pat.n != n) throw NotDecodable("oracle needs all n answers");

  const auto y_var = [&](std::size_t node, std::size_t t) { return node * d + t; };
  const auto c_var = [&](std::size_t u, std::size_t node, std::size_t b) {
    return n * d + u * n * a + node * a + b;
  };
  const std::size_t unknowns = n * d + p * n * a;

  const Mat parity = left_null_space(enc.psi);           // P * Psi = 0
  const Mat gen = generator_matrix(enc);                  // vec(C^f) = G x
  const Mat code_checks = left_null_space(gen);           // H * vec(C^f) = 0
  const std::size_t equations = n * d + parity.rows() * d + p * code_checks.rows();

  Mat system(f, equations, unknowns);
  Vec rhs = zero_vec(f, equations);
  std::size_t row = 0;
  // Answer equations: A_it = C_i U_t^T + sum_u C_i^{f_u} (V_t^{i_{f_u}})^T.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < d; ++t) {
      if (answers.answers[i].size() != d) throw NotDecodable("answer length differs from d");
      system.raw(row, y_var(i, t)) = 1;
      rhs[row] = answers.answers[i][t];
      ++row;
    }
  }
  for (const auto& s : pat.selections) {
    Residue& cell = system.raw(y_var(s.node, s.subquery), c_var(s.slot, s.node, s.symbol));
    cell = f.add(cell, 1);
  }
  // Interference columns C U_t^T lie in the column space of Psi.
  for (std::size_t t = 0; t < d; ++t) {
    for (std::size_t j = 0; j < parity.rows(); ++j, ++row) {
      for (std::size_t i = 0; i < n; ++i) system.raw(row, y_var(i, t)) = parity.raw(j, i);
    }
  }
  // Each desired C^{f_u} is a codeword.
  for (std::size_t u = 0; u < p; ++u) {
    for (std::size_t j = 0; j < code_checks.rows(); ++j, ++row) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t b = 0; b < a; ++b) system.raw(row, c_var(u, i, b)) = code_checks.raw(j, i * a + b);
    }
  }

  Vec solution;
  try {
    solution = solve(system, rhs);
  } catch (const RankDeficient& e) {
    throw NotDecodable(std::string("decodability condition fails: ") + e.what() + " (" +
                       std::to_string(unknowns) + " unknowns)");
  } catch (const InconsistentSystem& e) {
    throw NotDecodable(std::string("answers are inconsistent with the code: ") + e.what());
  }
  std::vector<Vec> records;
  for (std::size_t u = 0; u < p; ++u) {
    Vec codeword(solution.begin() + static_cast<std::ptrdiff_t>(c_var(u, 0, 0)),
                 solution.begin() + static_cast<std::ptrdiff_t>(c_var(u, 0, 0) + n * a));
    records.push_back(solve(gen, codeword));
  }
  return records;
}

bool privacy_bijection_check(const RetrievalPattern& pattern, std::size_t node, std::size_t m,
                             const PrimeField& field, const PrivacyOptions& options) {
  if (node >= pattern.n) throw InvalidParameters("node index out of range");
  if (pattern.p > m) throw InvalidParameters("p exceeds m");
  const QueryAssembler assembler = options.assembler ? options.assembler : QueryAssembler(assemble_query);
  const std::size_t cells = pattern.d * m * pattern.alpha;
  const std::uint64_t q = field.modulus();

  std::uint64_t space = 1;
  bool enumerable = true;
  for (std::size_t c = 0; c < cells && enumerable; ++c) {
    if (space > options.enumeration_limit / q) enumerable = false;
    space *= q;
  }
  enumerable = enumerable && space <= options.enumeration_limit;

  if (!enumerable) {
    if (!options.sampled) {
      throw PrivacyGuardExceeded("q^(d*m*alpha) exceeds the enumeration limit of " +
                                 std::to_string(options.enumeration_limit) +
                                 "; enable sampled mode");
    }
    Rng rng(options.seed);
    std::vector<std::size_t> all(m);
    for (std::size_t s = 0; s < options.samples; ++s) {
      Mat u(field, pattern.d, m * pattern.alpha);
      for (std::size_t i = 0; i < u.rows(); ++i)
        for (std::size_t j = 0; j < u.cols(); ++j) u.raw(i, j) = field.sample(rng);
      for (std::size_t i = 0; i < m; ++i) all[i] = i;
      for (std::size_t i = 0; i < pattern.p; ++i) std::swap(all[i], all[i + rng.below(m - i)]);
      std::vector<std::size_t> f(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(pattern.p));
      std::sort(f.begin(), f.end());
      const Mat qn = assembler(pattern, node, u, f, m);
      if (!(qn - query_offset(pattern, node, f, m, field) == u)) return false;
    }
    return true;
  }

  return for_each_combination(m, pattern.p, [&](const std::vector<std::size_t>& f) {
    std::unordered_set<std::uint64_t> images;
    images.reserve(static_cast<std::size_t>(space));
    std::vector<Residue> digits(cells, 0);
    for (std::uint64_t idx = 0; idx < space; ++idx) {
      Mat u(field, pattern.d, m * pattern.alpha);
      for (std::size_t c = 0; c < cells; ++c) u.raw(c / u.cols(), c % u.cols()) = digits[c];
      const Mat qn = assembler(pattern, node, u, f, m);
      if (qn.rows() != u.rows() || qn.cols() != u.cols()) return false;
      std::uint64_t key = 0;
      for (std::size_t c = cells; c-- > 0;) key = key * q + qn.raw(c / qn.cols(), c % qn.cols());
      if (!images.insert(key).second) return false;
      for (std::size_t c = 0; c < cells; ++c) {
        if (++digits[c] < q) break;
        digits[c] = 0;
      }
    }
    return images.size() == space;
  });
}

Metrics metrics(const CodeParams& params, std::size_t d, std::size_t p) {
  if (p == 0) throw InvalidParameters("metrics need p >= 1");
  const auto n = static_cast<std::int64_t>(params.n);
  const auto a = static_cast<std::int64_t>(params.alpha);
  const auto ell = static_cast<std::int64_t>(params.ell);
  return {Rational(n * a, ell),
          Rational(static_cast<std::int64_t>(d) * n, static_cast<std::int64_t>(p) * ell),
          Rational(static_cast<std::int64_t>(params.r), a)};
}

TradeoffResult tradeoff_check(const CodeParams& params, std::size_t d, std::size_t p) {
  const Metrics mt = metrics(params, d, p);
  const auto k = static_cast<std::int64_t>(params.k);
  const auto slack = static_cast<std::int64_t>(params.n - params.r);
  return {p * params.k * params.alpha <= (params.n - params.r) * d,
          mt.cpop * Rational(slack) / (Rational(k) * mt.so)};
}

}  // namespace pmpir
