#include "pmpir/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <functional>
#include <set>
#include <utility>

#include <json.hpp>

#include "pmpir/error.hpp"

namespace pmpir {

namespace {

using Json = nlohmann::ordered_json;
using TrialHook = std::function<std::optional<std::string>(const EncodedDatabase&, const RetrievalRun&)>;

std::string variable(std::size_t record, std::size_t symbol) {
  if (record < 10 && symbol < 10) return "x" + std::to_string(record) + std::to_string(symbol);
  return "x_{" + std::to_string(record) + "," + std::to_string(symbol) + "}";
}

std::vector<std::size_t> random_subset(std::size_t m, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> all(m);
  for (std::size_t i = 0; i < m; ++i) all[i] = i;
  for (std::size_t i = 0; i < p; ++i) std::swap(all[i], all[i + rng.below(m - i)]);
  all.resize(p);
  std::sort(all.begin(), all.end());
  return all;
}

std::string join_one_based(const std::vector<std::size_t>& xs) {
  std::string out = "{";
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i] + 1);
  return out + "}";
}

ExperimentReport run_pipeline(std::string name, const ExperimentConfig& config,
                              const std::function<void(const EncodingMatrix&, ExperimentReport&)>& setup_hook,
                              const TrialHook& trial_hook) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.experiment = std::move(name);
  rep.config = config;
  rep.params = scheme_params(config.scheme, config.k, config.p, config.r);
  rep.q = config.q.value_or(default_modulus(rep.params));
  if (config.m < config.p) throw InvalidParameters("m must be at least p");
  if (config.desired) normalize_desired(*config.desired, config.p, config.m);

  const PrimeField field(rep.q);
  const EncodingMatrix enc = build_encoding_matrix(rep.params, field);
  const RetrievalPattern pattern = make_pattern(config.scheme, rep.params, config.p);
  rep.d = pattern.d;
  rep.metrics = metrics(rep.params, rep.d, config.p);
  const TradeoffResult tr = tradeoff_check(rep.params, rep.d, config.p);
  rep.identity = tr.identity;
  rep.bound_holds = tr.bound_holds;
  rep.checks.push_back({"tradeoff_identity", tr.bound_holds && tr.identity == Rational(1),
                        "identity = " + tr.identity.str()});
  if (setup_hook) setup_hook(enc, rep);

  if (config.trials > 0) {
    Measurements ms;
    Rng rng(config.seed);
    const Database db = random_database(field, config.m, rep.params.ell, rng);
    EncodedDatabase edb = EncodedDatabase::ingest(db, enc);
    for (const auto& row : edb.raw_rows()) ms.stored_symbols += row.size();
    ms.so = Rational(static_cast<std::int64_t>(ms.stored_symbols),
                     static_cast<std::int64_t>(config.m * rep.params.ell));
    rep.checks.push_back({"measured_so", ms.so == rep.metrics.so, "measured " + ms.so.str()});

    bool failed = false;
    if (config.repair) {
      if (!enc.repair_capable) {
        rep.checks.push_back({"repair_cycle", false, enc.repair_note});
        failed = true;
      } else {
        for (std::size_t node = 0; node < edb.n() && !failed; ++node) {
          const Vec before = edb.node_row(node);
          edb.fail_node(node);
          const RepairReport rr = edb.repair_node(node);
          ms.repair_symbols += rr.symbols_downloaded;
          ms.repaired_symbols += rr.node_symbols;
          if (!(edb.node_row(node) == before)) {
            rep.checks.push_back({"repair_cycle", false,
                                  "node " + std::to_string(node + 1) + " not restored exactly"});
            failed = true;
          }
        }
        if (!failed) {
          ms.rr = Rational(static_cast<std::int64_t>(ms.repair_symbols),
                           static_cast<std::int64_t>(ms.repaired_symbols));
          rep.checks.push_back({"repair_cycle", true, "all nodes restored"});
          rep.checks.push_back({"measured_rr", *ms.rr == rep.metrics.rr, "measured " + ms.rr->str()});
        }
      }
    }

    for (std::size_t t = 0; t < config.trials && !failed; ++t) {
      const std::uint64_t trial_seed = derive_seed(config.seed, t + 1);
      const std::vector<std::size_t> desired =
          config.desired ? normalize_desired(*config.desired, config.p, config.m)
                         : random_subset(config.m, config.p, derive_seed(trial_seed, 0));
      std::string problem;
      try {
        const RetrievalRun run = retrieve(edb, config.scheme, desired, trial_seed, config.oracle);
        if (run.answers.downloaded_symbols != rep.params.n * rep.d) {
          problem = "downloaded " + std::to_string(run.answers.downloaded_symbols) + " symbols";
        }
        for (std::size_t u = 0; u < desired.size() && problem.empty(); ++u) {
          if (run.decoded.records[u] != db.records[desired[u]]) {
            problem = "record " + std::to_string(desired[u] + 1) + " decoded incorrectly";
          } else if (run.oracle_records && (*run.oracle_records)[u] != db.records[desired[u]]) {
            problem = "oracle disagrees on record " + std::to_string(desired[u] + 1);
          }
        }
        if (problem.empty() && trial_hook) {
          if (auto msg = trial_hook(edb, run)) problem = *msg;
        }
        if (problem.empty()) {
          ms.downloaded_symbols += run.answers.downloaded_symbols;
          ++ms.trials;
        }
      } catch (const Error& e) {
        problem = e.what();
      }
      if (!problem.empty()) {
        rep.checks.push_back({"retrieval", false,
                              "trial " + std::to_string(t + 1) + " desired " + join_one_based(desired) +
                                  ": " + problem});
        rep.failing_seed = trial_seed;
        failed = true;
      }
    }
    if (!failed) {
      ms.cpop = Rational(static_cast<std::int64_t>(ms.downloaded_symbols),
                         static_cast<std::int64_t>(config.p * rep.params.ell * ms.trials));
      rep.checks.push_back({"retrieval", true, std::to_string(ms.trials) + " trials decoded"});
      rep.checks.push_back({"measured_cpop", ms.cpop == rep.metrics.cpop, "measured " + ms.cpop.str()});
    }
    rep.measured = ms;
  }
  if (config.timing) {
    rep.wall_clock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return rep;
}

Json rational_json(const Rational& r) { return r.str(); }

std::vector<std::size_t> one_based(const std::vector<std::size_t>& xs) {
  std::vector<std::size_t> out;
  for (auto x : xs) out.push_back(x + 1);
  return out;
}

}  // namespace

bool ExperimentReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string ExperimentReport::to_json(int indent) const {
  Json j;
  j["report_v"] = 1;
  j["experiment"] = experiment;
  Json cfg;
  cfg["scheme"] = to_string(config.scheme);
  cfg["k"] = config.k;
  cfg["p"] = config.p;
  cfg["m"] = config.m;
  cfg["r"] = config.r ? Json(*config.r) : Json(nullptr);
  cfg["q"] = config.q ? Json(*config.q) : Json(nullptr);
  cfg["seed"] = config.seed;
  cfg["desired"] = config.desired ? Json(one_based(*config.desired)) : Json(nullptr);
  cfg["trials"] = config.trials;
  cfg["repair"] = config.repair;
  cfg["oracle"] = config.oracle;
  j["config"] = cfg;
  j["params"] = {{"family", to_string(params.family)}, {"n", params.n},       {"k", params.k},
                 {"r", params.r},                      {"alpha", params.alpha}, {"beta", params.beta},
                 {"ell", params.ell}};
  j["q"] = q;
  j["d"] = d;
  j["metrics"] = {{"so", rational_json(metrics.so)},
                  {"cpop", rational_json(metrics.cpop)},
                  {"rr", rational_json(metrics.rr)}};
  j["identity"] = rational_json(identity);
  j["bound_holds"] = bound_holds;
  if (measured) {
    Json mj;
    mj["trials"] = measured->trials;
    mj["downloaded_symbols"] = measured->downloaded_symbols;
    mj["stored_symbols"] = measured->stored_symbols;
    mj["repair_symbols"] = measured->repair_symbols;
    mj["repaired_symbols"] = measured->repaired_symbols;
    mj["cpop"] = measured->trials ? rational_json(measured->cpop) : Json(nullptr);
    mj["so"] = rational_json(measured->so);
    mj["rr"] = measured->rr ? rational_json(*measured->rr) : Json(nullptr);
    j["measured"] = mj;
  } else {
    j["measured"] = nullptr;
  }
  Json checks_j = Json::array();
  for (const auto& c : checks) checks_j.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks_j;
  j["passed"] = passed();
  j["failing_seed"] = failing_seed ? Json(*failing_seed) : Json(nullptr);
  if (wall_clock_ms) j["wall_clock_ms"] = *wall_clock_ms;
  return j.dump(indent);
}

std::vector<std::vector<std::string>> symbolic_storage_table(const EncodingMatrix& enc,
                                                             std::size_t m) {
  const Mat gen = generator_matrix(enc);
  const std::size_t alpha = enc.params.alpha;
  std::vector<std::vector<std::string>> table(enc.params.n, std::vector<std::string>(m * alpha));
  for (std::size_t node = 0; node < enc.params.n; ++node) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t s = 0; s < alpha; ++s) {
        std::string cell;
        for (std::size_t l = 0; l < enc.params.ell; ++l) {
          const Residue c = gen.raw(node * alpha + s, l);
          if (c == 0) continue;
          if (!cell.empty()) cell += "+";
          if (c != 1) cell += std::to_string(c);
          cell += variable(j + 1, l + 1);
        }
        table[node][j * alpha + s] = cell.empty() ? "0" : cell;
      }
    }
  }
  return table;
}

RetrievalRun retrieve(const EncodedDatabase& edb, SchemeId scheme,
                      const std::vector<std::size_t>& desired, std::uint64_t seed, bool oracle) {
  const std::size_t p = scheme_p_from_params(scheme, edb.params());
  const RetrievalPattern pattern = make_pattern(scheme, edb.params(), p);
  RetrievalRun run{gen_queries(pattern, desired, edb.m(), edb.field(), seed), {}, {}, std::nullopt};
  run.answers = answer_all(edb, run.plan);
  run.decoded = decode(run.plan, run.answers, edb.encoding());
  if (oracle) run.oracle_records = decodability_oracle(run.plan, run.answers, edb.encoding());
  return run;
}

ExperimentReport run_example_1(std::size_t trials, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.scheme = SchemeId::MSR_A;
  cfg.k = 3;
  cfg.p = 2;
  cfg.m = 3;
  cfg.q = 13;
  cfg.seed = seed;
  cfg.desired = std::vector<std::size_t>{0, 1};
  cfg.trials = trials;
  cfg.oracle = true;

  // Node i stores x_j1 + a x_j2 + b x_j4 + c x_j5 and x_j2 + a x_j3 + b x_j5 + c x_j6.
  static constexpr std::array<std::array<int, 3>, 10> kCoefficients{{{1, 1, 1},
                                                                      {2, 4, 8},
                                                                      {3, 9, 1},
                                                                      {4, 3, 12},
                                                                      {5, 12, 8},
                                                                      {6, 10, 8},
                                                                      {7, 10, 5},
                                                                      {8, 12, 5},
                                                                      {9, 3, 1},
                                                                      {10, 9, 12}}};
  auto setup = [](const EncodingMatrix& enc, ExperimentReport& rep) {
    const auto table = symbolic_storage_table(enc, 3);
    const auto term = [](int c, const std::string& v) { return "+" + (c == 1 ? "" : std::to_string(c)) + v; };
    std::string mismatch;
    for (std::size_t node = 0; node < 10 && mismatch.empty(); ++node) {
      const auto& [a, b, c] = kCoefficients[node];
      for (std::size_t j = 1; j <= 3 && mismatch.empty(); ++j) {
        const std::array<std::string, 2> expect{
            variable(j, 1) + term(a, variable(j, 2)) + term(b, variable(j, 4)) + term(c, variable(j, 5)),
            variable(j, 2) + term(a, variable(j, 3)) + term(b, variable(j, 5)) + term(c, variable(j, 6))};
        for (std::size_t s = 0; s < 2; ++s) {
          const std::string& got = table[node][(j - 1) * 2 + s];
          if (got != expect[s]) {
            mismatch = "node " + std::to_string(node + 1) + ": expected " + expect[s] + ", got " + got;
            break;
          }
        }
      }
    }
    rep.checks.push_back({"storage_table", mismatch.empty(), mismatch.empty() ? "60 cells match" : mismatch});
    rep.checks.push_back({"so", rep.metrics.so == Rational(10, 3), rep.metrics.so.str()});
    rep.checks.push_back({"cpop", rep.metrics.cpop == Rational(5, 3), rep.metrics.cpop.str()});
  };
  auto hook = [](const EncodedDatabase&, const RetrievalRun& run) -> std::optional<std::string> {
    if (run.answers.downloaded_symbols != 20) {
      return "downloaded " + std::to_string(run.answers.downloaded_symbols) + " symbols, expected 20";
    }
    return std::nullopt;
  };
  return run_pipeline("example1", cfg, setup, hook);
}

ExperimentReport run_example_2(std::size_t trials, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.scheme = SchemeId::MSR_B;
  cfg.k = 3;
  cfg.p = 2;
  cfg.m = 3;
  cfg.q = 13;
  cfg.seed = seed;
  cfg.desired = std::vector<std::size_t>{0, 1};
  cfg.trials = trials;
  cfg.oracle = true;

  auto setup = [](const EncodingMatrix&, ExperimentReport& rep) {
    rep.checks.push_back({"d", rep.d == 3, std::to_string(rep.d)});
    rep.checks.push_back({"cpop", rep.metrics.cpop == Rational(2), rep.metrics.cpop.str()});
  };
  auto hook = [](const EncodedDatabase& edb, const RetrievalRun& run) -> std::optional<std::string> {
    if (run.answers.downloaded_symbols != 24) {
      return "downloaded " + std::to_string(run.answers.downloaded_symbols) + " symbols, expected 24";
    }
    const SubqueryTrace& first = run.decoded.traces.at(0);
    if (first.interference_nodes != std::vector<std::size_t>{1, 4, 6, 7}) {
      return "subquery 1 interference rows " + join_one_based(first.interference_nodes) +
             ", expected {2,5,7,8}";
    }
    // (node, global column) of C^1_11, C^1_32, C^2_43, C^2_64.
    const std::set<std::pair<std::size_t, std::size_t>> expect{{0, 0}, {2, 1}, {3, 2}, {5, 3}};
    std::set<std::pair<std::size_t, std::size_t>> got;
    for (const auto& e : first.extracted) {
      got.insert({e.node, e.column});
      if (e.value != edb.node_row(e.node)[e.column]) {
        return "subquery 1 extracted a wrong value at node " + std::to_string(e.node + 1);
      }
    }
    if (got != expect) return std::string("subquery 1 extracted an unexpected symbol set");
    return std::nullopt;
  };
  return run_pipeline("example2", cfg, setup, hook);
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  return run_pipeline("experiment", config, nullptr, nullptr);
}

}  // namespace pmpir
