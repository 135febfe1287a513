// Acceptance run: one PASS/FAIL line per criterion, with its runtime budget.
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "pmpir/combinatorics.hpp"
#include "pmpir/error.hpp"
#include "pmpir/harness.hpp"

using namespace pmpir;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
  void expect(bool cond, const std::string& why) {
    if (!cond) fail(why);
  }
};

using Criterion = std::function<void(Outcome&)>;

// Storage table of the (10,3,4,2,1,6) code over F_13, node by node.
const char* const kTable[10][6] = {
    {"x11+x12+x14+x15", "x12+x13+x15+x16", "x21+x22+x24+x25", "x22+x23+x25+x26", "x31+x32+x34+x35", "x32+x33+x35+x36"},
    {"x11+2x12+4x14+8x15", "x12+2x13+4x15+8x16", "x21+2x22+4x24+8x25", "x22+2x23+4x25+8x26", "x31+2x32+4x34+8x35", "x32+2x33+4x35+8x36"},
    {"x11+3x12+9x14+x15", "x12+3x13+9x15+x16", "x21+3x22+9x24+x25", "x22+3x23+9x25+x26", "x31+3x32+9x34+x35", "x32+3x33+9x35+x36"},
    {"x11+4x12+3x14+12x15", "x12+4x13+3x15+12x16", "x21+4x22+3x24+12x25", "x22+4x23+3x25+12x26", "x31+4x32+3x34+12x35", "x32+4x33+3x35+12x36"},
    {"x11+5x12+12x14+8x15", "x12+5x13+12x15+8x16", "x21+5x22+12x24+8x25", "x22+5x23+12x25+8x26", "x31+5x32+12x34+8x35", "x32+5x33+12x35+8x36"},
    {"x11+6x12+10x14+8x15", "x12+6x13+10x15+8x16", "x21+6x22+10x24+8x25", "x22+6x23+10x25+8x26", "x31+6x32+10x34+8x35", "x32+6x33+10x35+8x36"},
    {"x11+7x12+10x14+5x15", "x12+7x13+10x15+5x16", "x21+7x22+10x24+5x25", "x22+7x23+10x25+5x26", "x31+7x32+10x34+5x35", "x32+7x33+10x35+5x36"},
    {"x11+8x12+12x14+5x15", "x12+8x13+12x15+5x16", "x21+8x22+12x24+5x25", "x22+8x23+12x25+5x26", "x31+8x32+12x34+5x35", "x32+8x33+12x35+5x36"},
    {"x11+9x12+3x14+x15", "x12+9x13+3x15+x16", "x21+9x22+3x24+x25", "x22+9x23+3x25+x26", "x31+9x32+3x34+x35", "x32+9x33+3x35+x36"},
    {"x11+10x12+9x14+12x15", "x12+10x13+9x15+12x16", "x21+10x22+9x24+12x25", "x22+10x23+9x25+12x26", "x31+10x32+9x34+12x35", "x32+10x33+9x35+12x36"},
};

struct Instance {
  EncodingMatrix enc;
  Database db;
  EncodedDatabase edb;
  RetrievalPattern pattern;
};

Instance build(SchemeId scheme, std::size_t k, std::size_t p, std::size_t m, Residue q, std::uint64_t seed,
               std::optional<std::size_t> r = std::nullopt) {
  const CodeParams params = scheme_params(scheme, k, p, r);
  EncodingMatrix enc = build_encoding_matrix(params, PrimeField(q));
  Rng rng(seed);
  Database db = random_database(enc.field, m, params.ell, rng);
  EncodedDatabase edb = EncodedDatabase::ingest(db, enc);
  return {enc, std::move(db), std::move(edb), make_pattern(scheme, params, p)};
}

Rational identity_of(const CodeParams& p, const Rational& cpop, const Rational& so) {
  return cpop * Rational(static_cast<std::int64_t>(p.n - p.r)) / (Rational(static_cast<std::int64_t>(p.k)) * so);
}

void criterion_1(Outcome& o) {
  const EncodingMatrix enc =
      build_encoding_matrix(derive_params(CodeFamily::MSR, 3, std::nullopt, 10), PrimeField(13));
  const auto table = symbolic_storage_table(enc, 3);
  std::size_t matched = 0;
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t c = 0; c < 6; ++c) {
      if (table[i][c] == kTable[i][c]) {
        ++matched;
      } else {
        o.fail("node " + std::to_string(i + 1) + " cell " + std::to_string(c + 1) + ": " + table[i][c]);
      }
    }
  if (o.ok) o.detail = std::to_string(matched) + "/60 cells match";
}

void criterion_2(Outcome& o) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const ExperimentReport rep = run_example_1(1, seed);
    const std::string tag = "seed " + std::to_string(seed) + ": ";
    o.expect(rep.passed(), tag + "report failed");
    o.expect(rep.measured && rep.measured->downloaded_symbols == 20, tag + "downloaded != 20");
    o.expect(rep.measured && rep.measured->cpop == Rational(5, 3), tag + "measured cPoP != 5/3");
    // 1 + (2k-2)/(pk) with k = 3, p = 2.
    o.expect(rep.metrics.cpop == Rational(1) + Rational(4, 6), tag + "cPoP != 1 + (2k-2)/(pk)");
    o.expect(rep.metrics.so == Rational(10, 3), tag + "SO != 10/3");
    o.expect(rep.measured && identity_of(rep.params, rep.measured->cpop, rep.metrics.so) == Rational(1),
             tag + "identity != 1");
  }
  if (o.ok) o.detail = "100 seeds, 20 symbols each, cPoP 5/3, SO 10/3, identity 1";
}

void criterion_3(Outcome& o) {
  const ExperimentReport rep = run_example_2(1, 1);
  o.expect(rep.passed(), "example report failed");
  Instance in = build(SchemeId::MSR_B, 3, 2, 3, 13, 42);
  o.expect(in.pattern.d == 3, "d != 3");
  const std::vector<std::size_t> desired{0, 1};
  const RetrievalRun run = retrieve(in.edb, SchemeId::MSR_B, desired, 7, false);
  o.expect(run.decoded.records[0] == in.db.records[0] && run.decoded.records[1] == in.db.records[1],
           "records differ");
  o.expect(run.answers.downloaded_symbols == 24, "downloaded != 24");
  const Rational cpop(static_cast<std::int64_t>(run.answers.downloaded_symbols), 2 * 6);
  o.expect(cpop == Rational(2) && cpop == Rational(1) + Rational(2, 2), "cPoP != 2 = 1 + 2/p");
  const SubqueryTrace& t1 = run.decoded.traces[0];
  o.expect(t1.interference_nodes == std::vector<std::size_t>{1, 4, 6, 7}, "interference rows != {2,5,7,8}");
  // (record, node, symbol), 1-based: C^1_11, C^1_32, C^2_43, C^2_64.
  const std::set<std::tuple<std::size_t, std::size_t, std::size_t>> expect{
      {1, 1, 1}, {1, 3, 2}, {2, 4, 3}, {2, 6, 4}};
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> got;
  for (const auto& e : t1.extracted) {
    got.insert({e.record + 1, e.node + 1, e.column + 1});
    o.expect(e.value == in.edb.node_row(e.node)[e.column], "extracted value differs from storage");
  }
  o.expect(got == expect, "subquery 1 extracted a different symbol set");
  if (o.ok) o.detail = "24 symbols, cPoP 2, subquery 1 -> C1_11 C1_32 C2_43 C2_64 via rows {2,5,7,8}";
}

void criterion_4(Outcome& o) {
  Instance in = build(SchemeId::MBR, 2, 2, 4, default_modulus(scheme_params(SchemeId::MBR, 2, 2)), 11);
  const CodeParams& p = in.enc.params;
  o.expect(p.n == 6 && p.ell == 3, "params " + p.str());
  std::size_t pairs = 0;
  std::uint64_t seed = 100;
  for_each_combination(4, 2, [&](const std::vector<std::size_t>& desired) {
    const RetrievalRun run = retrieve(in.edb, SchemeId::MBR, desired, ++seed, false);
    o.expect(run.decoded.records[0] == in.db.records[desired[0]] &&
                 run.decoded.records[1] == in.db.records[desired[1]],
             "pair decode mismatch");
    o.expect(Rational(static_cast<std::int64_t>(run.answers.downloaded_symbols), 2 * 3) == Rational(2),
             "measured cPoP != 2");
    ++pairs;
    return true;
  });
  const Metrics mt = metrics(p, in.pattern.d, 2);
  o.expect(pairs == 6, "expected 6 pairs");
  o.expect(mt.so == Rational(4) && mt.cpop == Rational(2) && mt.rr == Rational(1), "closed forms differ");
  o.expect(tradeoff_check(p, in.pattern.d, 2).identity == Rational(1), "identity != 1");
  if (o.ok) o.detail = "6/6 pairs, SO 4, cPoP 2, RR 1, identity 1";
}

void criterion_5(Outcome& o) {
  struct Case {
    SchemeId scheme;
    std::size_t k, p;
    std::optional<std::size_t> r;
  };
  // n = 10, 10, 10, 9, 9
  const std::vector<Case> cases{{SchemeId::MSR_A, 3, 2, {}},
                                {SchemeId::MSR_A, 4, 1, {}},
                                {SchemeId::MBR, 2, 4, 2},
                                {SchemeId::MBR, 2, 3, 3},
                                {SchemeId::MBR, 3, 2, 3}};
  std::size_t recoveries = 0;
  for (const auto& c : cases) {
    Instance in = build(c.scheme, c.k, c.p, 3, 101, c.k * 7 + c.p, c.r);
    const CodeParams& p = in.enc.params;
    for_each_combination(p.n, p.k, [&](const std::vector<std::size_t>& nodes) {
      for (std::size_t j = 0; j < in.db.m(); ++j) {
        std::vector<NodeShare> shares;
        for (auto i : nodes) shares.push_back({i, in.edb.share(i, j)});
        try {
          o.expect(recover(in.enc, shares) == in.db.records[j], p.str() + " wrong record");
        } catch (const Error& e) {
          o.fail(p.str() + ": " + e.what());
        }
        ++recoveries;
      }
      return true;
    });
  }
  if (o.ok) o.detail = std::to_string(recoveries) + " recoveries over all k-subsets";
}

void criterion_6(Outcome& o) {
  struct Case {
    SchemeId scheme;
    std::size_t k, p;
    std::optional<std::size_t> r;
  };
  // n = 8, 6, 7, 10, 10
  const std::vector<Case> cases{{SchemeId::MSR_B, 3, 2, {}},
                                {SchemeId::MBR, 2, 2, 2},
                                {SchemeId::MBR, 2, 2, 3},
                                {SchemeId::MSR_A, 3, 2, {}},
                                {SchemeId::MBR, 2, 4, 2}};
  const std::size_t m = 3;
  std::size_t repairs = 0;
  for (const auto& c : cases) {
    const CodeParams params = scheme_params(c.scheme, c.k, c.p, c.r);
    Instance in = build(c.scheme, c.k, c.p, m, default_modulus(params), 5, c.r);
    o.expect(in.enc.repair_capable, params.str() + " not repair-capable");
    const Rational want = c.scheme == SchemeId::MBR ? Rational(1) : Rational(2);
    Rng rng(params.n);
    for (std::size_t node = 0; node < params.n; ++node) {
      std::vector<std::size_t> others;
      for (std::size_t i = 0; i < params.n; ++i)
        if (i != node) others.push_back(i);
      std::vector<std::vector<std::size_t>> helper_sets;
      if (params.n <= 8) {
        for_each_combination(others.size(), params.r, [&](const std::vector<std::size_t>& pick) {
          std::vector<std::size_t> h;
          for (auto j : pick) h.push_back(others[j]);
          helper_sets.push_back(h);
          return true;
        });
      } else {
        for (int s = 0; s < 50; ++s) {
          std::vector<std::size_t> pool = others;
          for (std::size_t i = 0; i < params.r; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
          helper_sets.emplace_back(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(params.r));
        }
      }
      const Vec original = in.edb.node_row(node);
      for (const auto& helpers : helper_sets) {
        EncodedDatabase work = in.edb;
        work.fail_node(node);
        const RepairReport rep = work.repair_node(node, helpers);
        o.expect(work.node_row(node) == original, params.str() + " row not restored");
        o.expect(rep.symbols_downloaded == m * params.r, params.str() + " download != m r");
        o.expect(rep.repair_ratio() == want && want == Rational(static_cast<std::int64_t>(params.r),
                                                                static_cast<std::int64_t>(params.alpha)),
                 params.str() + " RR != r/alpha");
        ++repairs;
      }
    }
  }
  if (o.ok) o.detail = std::to_string(repairs) + " exact repairs, download m*r, RR = r/alpha";
}

void criterion_7(Outcome& o) {
  // Exhaustive: MBR k = r = 2 over F_2, m = 1, so Q is 2 x 2.
  const CodeParams tiny = scheme_params(SchemeId::MBR, 2, 1);
  const RetrievalPattern tp = make_pattern(SchemeId::MBR, tiny, 1);
  o.expect(tp.d * tp.alpha == 4, "tiny instance is not 2 x 2");
  for (std::size_t node = 0; node < tiny.n; ++node) {
    o.expect(privacy_bijection_check(tp, node, 1, PrimeField(2)), "node " + std::to_string(node + 1));
  }
  // Structural: Q^i - offset(F) = U for 10^4 sampled (seed, F).
  const std::size_t m = 5;
  Instance in = build(SchemeId::MSR_A, 3, 2, m, 101, 1);
  Rng pick(2024);
  for (std::uint64_t s = 0; s < 10'000; ++s) {
    std::vector<std::size_t> all{0, 1, 2, 3, 4};
    for (std::size_t i = 0; i < 2; ++i) std::swap(all[i], all[i + pick.below(m - i)]);
    std::vector<std::size_t> f{std::min(all[0], all[1]), std::max(all[0], all[1])};
    const QueryPlan plan = gen_queries(in.pattern, f, m, in.enc.field, derive_seed(77, s));
    for (std::size_t node = 0; node < in.enc.params.n; ++node) {
      if (!(plan.queries[node] - query_offset(in.pattern, node, f, m, in.enc.field) == plan.u)) {
        o.fail("sample " + std::to_string(s) + " node " + std::to_string(node + 1));
      }
    }
  }
  if (o.ok) o.detail = "16 U per node exhaustive; 10^4 sampled (seed, F) pairs";
}

void criterion_8(Outcome& o) {
  std::size_t agreed = 0;
  const auto compare = [&](const EncodedDatabase& edb, SchemeId scheme, const std::vector<std::size_t>& desired,
                           std::uint64_t seed) {
    std::optional<std::vector<Vec>> by_decode, by_oracle;
    const std::size_t p = scheme_p_from_params(scheme, edb.params());
    const QueryPlan plan =
        gen_queries(make_pattern(scheme, edb.params(), p), desired, edb.m(), edb.field(), seed);
    const AnswerSet ans = answer_all(edb, plan);
    try {
      by_decode = decode(plan, ans, edb.encoding()).records;
    } catch (const DecodeFailure&) {
    }
    try {
      by_oracle = decodability_oracle(plan, ans, edb.encoding());
    } catch (const NotDecodable&) {
    }
    o.expect(by_decode == by_oracle, to_string(scheme) + " seed " + std::to_string(seed) + " disagrees");
    ++agreed;
  };
  Instance ex1 = build(SchemeId::MSR_A, 3, 2, 3, 13, 1);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) compare(ex1.edb, SchemeId::MSR_A, {0, 1}, seed);
  Instance ex2 = build(SchemeId::MSR_B, 3, 2, 3, 13, 2);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) compare(ex2.edb, SchemeId::MSR_B, {0, 1}, seed);
  Instance mbr = build(SchemeId::MBR, 2, 2, 4, 7, 3);
  std::uint64_t seed = 0;
  for_each_combination(4, 2, [&](const std::vector<std::size_t>& d) {
    compare(mbr.edb, SchemeId::MBR, d, ++seed);
    return true;
  });
  if (o.ok) o.detail = std::to_string(agreed) + " retrievals, decode == oracle";
}

void criterion_9(Outcome& o) {
  std::size_t combos = 0;
  for (auto scheme : {SchemeId::MSR_A, SchemeId::MSR_B, SchemeId::MBR}) {
    for (std::size_t k = 1; k <= 5; ++k) {
      for (std::size_t p = 1; p <= 4; ++p) {
        CodeParams params;
        try {
          params = scheme_params(scheme, k, p);
        } catch (const InvalidParameters&) {
          continue;  // k = 1 MSR, or p > 2k-2 for msr-b
        }
        const std::size_t d = make_pattern(scheme, params, p).d;
        const std::string tag = to_string(scheme) + " k=" + std::to_string(k) + " p=" + std::to_string(p);
        o.expect(p * k * params.alpha == (params.n - params.r) * d, tag + ": pk alpha != (n-r) d");
        const TradeoffResult tr = tradeoff_check(params, d, p);
        o.expect(tr.bound_holds && tr.identity == Rational(1), tag + ": identity != 1");
        o.expect(!tradeoff_check(params, d - 1, p).bound_holds, tag + ": d-1 still satisfies the bound");
        ++combos;
      }
    }
  }
  if (o.ok) o.detail = std::to_string(combos) + " combinations tight, d-1 violates";
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    double budget_ms;  // 0: none stated
    Criterion run;
  };
  const std::vector<Entry> entries{
      {1, "storage table of the (10,3,4,2,1,6) code over F_13", 1000, criterion_1},
      {2, "MSR_A retrieval of {1,2}, 100 seeds", 2000, criterion_2},
      {3, "MSR_B (8,3,4,2,1,6) with d = 3", 1000, criterion_3},
      {4, "MBR (k,r,p) = (2,2,2), all pairs of 4 records", 1000, criterion_4},
      {5, "recovery from every k-subset over F_101", 30000, criterion_5},
      {6, "exact repair from r-helper subsets", 60000, criterion_6},
      {7, "privacy: U -> Q^i bijection", 0, criterion_7},
      {8, "decode agrees with the decodability oracle", 60000, criterion_8},
      {9, "trade-off tightness sweep", 0, criterion_9},
  };
  int failed = 0;
  for (const auto& e : entries) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      e.run(o);
    } catch (const std::exception& ex) {
      o.fail(std::string("exception: ") + ex.what());
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (e.budget_ms > 0 && ms >= e.budget_ms) o.fail("over budget");
    failed += o.ok ? 0 : 1;
    char budget[48] = "no limit";
    if (e.budget_ms > 0) std::snprintf(budget, sizeof budget, "limit %.0f ms", e.budget_ms);
    std::printf("criterion %d %s: %s (%.1f ms, %s) %s\n", e.id, o.ok ? "PASS" : "FAIL", e.name, ms, budget,
                o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(entries.size()) - failed, entries.size());
  return failed == 0 ? 0 : 1;
}
