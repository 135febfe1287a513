#include "pmpir/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmpir/dbstore.hpp"
#include "pmpir/error.hpp"
#include "pmpir/harness.hpp"
#include "pmpir/mpir.hpp"
#include "pmpir/pmcode.hpp"

namespace pmpir::cli {

namespace {

using Json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string scheme;
  std::size_t k = 0;
  std::size_t p = 0;
  std::optional<std::size_t> r;
  std::size_t m = 3;
  std::optional<std::uint64_t> q;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string in;
  std::vector<std::size_t> desired;
  std::size_t node = 0;
  std::vector<std::size_t> helpers;
  std::size_t trials = 1;
  bool json_compact = false;
  bool no_stripe = false;
  bool oracle = false;
};

std::uint64_t resolve_seed(const Flags& f) {
  if (f.seed) return *f.seed;
  if (const char* env = std::getenv("PMPIR_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 0);
    if (*end != '\0') throw UsageError(std::string("PMPIR_SEED is not an integer: ") + env);
    return v;
  }
  return 1;
}

std::vector<std::size_t> zero_based(const std::vector<std::size_t>& xs, std::size_t limit,
                                    const char* what) {
  std::vector<std::size_t> out;
  for (auto x : xs) {
    if (x == 0 || x > limit) {
      throw UsageError(std::string(what) + " " + std::to_string(x) + " outside 1.." + std::to_string(limit));
    }
    out.push_back(x - 1);
  }
  return out;
}

void emit(std::ostream& out, const Json& j, const Flags& f) {
  out << j.dump(f.json_compact ? -1 : 2) << "\n";
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(x.value());
  return a;
}

Json params_json(const CodeParams& p) {
  return {{"family", to_string(p.family)}, {"n", p.n},         {"k", p.k},     {"r", p.r},
          {"alpha", p.alpha},              {"beta", p.beta}, {"ell", p.ell}};
}

Json repair_json(const RepairReport& rr) {
  std::vector<std::size_t> helpers;
  for (auto h : rr.helpers) helpers.push_back(h + 1);
  return {{"node", rr.node + 1},
          {"helpers", helpers},
          {"symbols_downloaded", rr.symbols_downloaded},
          {"per_helper_symbols", rr.per_helper_symbols},
          {"node_symbols", rr.node_symbols},
          {"repair_ratio", rr.repair_ratio().str()}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_encode(const Flags& f, std::ostream& out) {
  const SchemeId scheme = parse_scheme(f.scheme);
  const CodeParams params = scheme_params(scheme, f.k, f.p, f.r);
  const DatabaseDocument doc = parse_database_json(read_file(f.in));
  const Residue q = f.q ? *f.q : doc.q ? *doc.q : default_modulus(params);
  if (f.q && doc.q && *f.q != *doc.q) {
    throw InvalidParameters("--q " + std::to_string(*f.q) + " contradicts the input's q = " +
                            std::to_string(*doc.q));
  }
  const PrimeField field(q);
  const Database db = make_database(field, doc.records, params.ell, !f.no_stripe);
  const EncodingMatrix enc = build_encoding_matrix(params, field);
  const EncodedDatabase edb = EncodedDatabase::ingest(db, enc);
  write_store(f.out, edb);
  emit(out,
       {{"store", f.out},
        {"scheme", to_string(scheme)},
        {"params", params_json(params)},
        {"q", q},
        {"m", edb.m()},
        {"stored_symbols", edb.n() * edb.m() * params.alpha},
        {"repair_capable", enc.repair_capable}},
       f);
  return kExitOk;
}

int cmd_retrieve(const Flags& f, std::ostream& out) {
  const EncodedDatabase edb = read_store(f.in);
  SchemeId scheme;
  if (!f.scheme.empty()) {
    scheme = parse_scheme(f.scheme);
  } else if (edb.params().family == CodeFamily::MBR) {
    scheme = SchemeId::MBR;
  } else {
    throw UsageError("--scheme is required for MSR stores (msr-a or msr-b)");
  }
  const std::size_t p = scheme_p_from_params(scheme, edb.params());
  if (f.desired.size() != p) {
    throw UsageError("this store retrieves p = " + std::to_string(p) + " records per run, " +
                     std::to_string(f.desired.size()) + " given in --desired");
  }
  std::vector<std::size_t> desired = zero_based(f.desired, edb.m(), "desired record");
  try {
    desired = normalize_desired(desired, p, edb.m());
  } catch (const InvalidParameters& e) {
    throw UsageError(e.what());
  }
  const std::uint64_t seed = resolve_seed(f);

  ExperimentReport rep;
  rep.experiment = "retrieve";
  rep.config.scheme = scheme;
  rep.config.k = edb.params().k;
  rep.config.p = p;
  rep.config.m = edb.m();
  rep.config.r = edb.params().r;
  rep.config.q = edb.field().modulus();
  rep.config.seed = seed;
  rep.config.desired = desired;
  rep.config.oracle = f.oracle;
  rep.params = edb.params();
  rep.q = edb.field().modulus();
  const RetrievalPattern pattern = make_pattern(scheme, edb.params(), p);
  rep.d = pattern.d;
  rep.metrics = metrics(rep.params, rep.d, p);
  const TradeoffResult tr = tradeoff_check(rep.params, rep.d, p);
  rep.identity = tr.identity;
  rep.bound_holds = tr.bound_holds;

  Json records = Json::array();
  try {
    const RetrievalRun run = retrieve(edb, scheme, desired, seed, f.oracle);
    Measurements ms;
    ms.trials = 1;
    ms.downloaded_symbols = run.answers.downloaded_symbols;
    for (const auto& row : edb.raw_rows()) ms.stored_symbols += row.size();
    ms.cpop = Rational(static_cast<std::int64_t>(ms.downloaded_symbols),
                       static_cast<std::int64_t>(p * rep.params.ell));
    ms.so = Rational(static_cast<std::int64_t>(ms.stored_symbols),
                     static_cast<std::int64_t>(edb.m() * rep.params.ell));
    rep.measured = ms;
    rep.checks.push_back({"retrieval", true, "decoded"});
    // Decoded records must re-encode to what the nodes store.
    bool consistent = true;
    for (std::size_t u = 0; u < p; ++u) {
      const Mat c = encode_record(edb.encoding(), run.decoded.records[u]);
      for (std::size_t i = 0; i < edb.n(); ++i) {
        if (!edb.alive(i)) continue;
        for (std::size_t s = 0; s < rep.params.alpha; ++s) {
          consistent = consistent && c.at(i, s) == edb.node_row(i)[desired[u] * rep.params.alpha + s];
        }
      }
      records.push_back({{"record", desired[u] + 1}, {"symbols", vec_json(run.decoded.records[u])}});
    }
    rep.checks.push_back({"records_match_store", consistent, consistent ? "" : "re-encoding differs"});
    rep.checks.push_back({"measured_cpop", ms.cpop == rep.metrics.cpop, "measured " + ms.cpop.str()});
    if (run.oracle_records) {
      const bool agree = *run.oracle_records == run.decoded.records;
      rep.checks.push_back({"oracle_agrees", agree, agree ? "" : "oracle returned different records"});
    }
  } catch (const Error& e) {
    rep.checks.push_back({"retrieval", false, e.what()});
    rep.failing_seed = seed;
  }
  Json doc;
  doc["records"] = records;
  doc["report"] = Json::parse(rep.to_json());
  emit(out, doc, f);
  return rep.passed() ? kExitOk : kExitCheckFailed;
}

int cmd_repair(const Flags& f, std::ostream& out) {
  EncodedDatabase edb = read_store(f.in);
  const std::size_t node = zero_based({f.node}, edb.n(), "node").front();
  std::optional<std::vector<std::size_t>> helpers;
  if (!f.helpers.empty()) helpers = zero_based(f.helpers, edb.n(), "helper");
  if (!edb.encoding().repair_capable) throw RepairUnavailable(edb.encoding().repair_note);

  std::optional<Vec> before;
  if (edb.alive(node)) {
    before = edb.node_row(node);
    edb.fail_node(node);
  }
  const RepairReport rr = edb.repair_node(node, helpers);
  edb.check_consistency();
  const bool exact = !before || *before == edb.node_row(node);
  Json j = repair_json(rr);
  j["simulated_failure"] = before.has_value();
  j["exact"] = exact;
  if (!exact) {
    emit(out, j, f);
    return kExitCheckFailed;
  }
  write_store(f.in, edb);
  emit(out, j, f);
  return kExitOk;
}

int cmd_metrics(const Flags& f, std::ostream& out) {
  const SchemeId scheme = parse_scheme(f.scheme);
  const CodeParams params = scheme_params(scheme, f.k, f.p, f.r);
  const RetrievalPattern pattern = make_pattern(scheme, params, f.p);
  const Metrics mt = metrics(params, pattern.d, f.p);
  const TradeoffResult tr = tradeoff_check(params, pattern.d, f.p);
  emit(out,
       {{"so", mt.so.str()}, {"cpop", mt.cpop.str()}, {"rr", mt.rr.str()}, {"identity", tr.identity.str()}},
       f);
  return kExitOk;
}

int cmd_verify(const Flags& f, std::ostream& out) {
  ExperimentConfig cfg;
  cfg.scheme = parse_scheme(f.scheme);
  cfg.k = f.k;
  cfg.p = f.p;
  cfg.r = f.r;
  cfg.m = f.m;
  cfg.q = f.q;
  cfg.seed = resolve_seed(f);
  cfg.trials = f.trials;
  cfg.oracle = true;
  const CodeParams params = scheme_params(cfg.scheme, cfg.k, cfg.p, cfg.r);
  const Residue q = cfg.q.value_or(default_modulus(params));
  cfg.repair = build_encoding_matrix(params, PrimeField(q)).repair_capable;

  ExperimentReport rep = run_experiment(cfg);
  rep.experiment = "verify";
  if (rep.d > 0) {
    const bool tight = !tradeoff_check(rep.params, rep.d - 1, cfg.p).bound_holds;
    rep.checks.push_back({"bound_tight", tight, "d - 1 = " + std::to_string(rep.d - 1)});
  }
  const RetrievalPattern pattern = make_pattern(cfg.scheme, rep.params, cfg.p);
  PrivacyOptions opts;
  opts.sampled = true;
  opts.samples = 200;
  opts.seed = cfg.seed;
  bool private_ok = true;
  for (std::size_t node = 0; node < rep.params.n && private_ok; ++node) {
    private_ok = privacy_bijection_check(pattern, node, cfg.m, PrimeField(rep.q), opts);
  }
  rep.checks.push_back({"privacy", private_ok, "U -> Q^i bijective at every node"});
  out << rep.to_json(f.json_compact ? -1 : 2) << "\n";
  return rep.passed() ? kExitOk : kExitCheckFailed;
}

int cmd_example(int which, const Flags& f, std::ostream& out) {
  const ExperimentReport rep =
      which == 1 ? run_example_1(f.trials, resolve_seed(f)) : run_example_2(f.trials, resolve_seed(f));
  out << rep.to_json(f.json_compact ? -1 : 2) << "\n";
  return rep.passed() ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-message private information retrieval over product-matrix codes", "pmpir"};
  app.require_subcommand(1);
  Flags f;
  const auto schemes = CLI::IsMember({"msr-a", "msr_a", "msr-b", "msr_b", "mbr"}, CLI::ignore_case);

  const auto add_json = [&f](CLI::App* sub) {
    sub->add_flag("--json", f.json_compact, "Print compact single-line JSON");
  };
  const auto add_seed = [&f](CLI::App* sub) {
    sub->add_option("--seed", f.seed, "RNG seed (falls back to $PMPIR_SEED, then 1)");
  };
  const auto add_code = [&](CLI::App* sub) {
    sub->add_option("--scheme", f.scheme, "Retrieval scheme")->required()->check(schemes);
    sub->add_option("--k", f.k, "Recovery threshold k")->required()->check(CLI::PositiveNumber);
    sub->add_option("--p", f.p, "Records retrieved per run")->required()->check(CLI::PositiveNumber);
    sub->add_option("--r", f.r, "MBR helper count (default k)")->check(CLI::PositiveNumber);
  };

  auto* encode = app.add_subcommand("encode", "Encode a JSON database into a store file");
  add_code(encode);
  encode->add_option("--in", f.in, "Database JSON {\"q\":..,\"records\":[[..],..]}")->required();
  encode->add_option("--out", f.out, "Store file to write")->required();
  encode->add_option("--q", f.q, "Field modulus");
  encode->add_flag("--no-stripe", f.no_stripe, "Require every record to have exactly ell symbols");
  add_json(encode);

  auto* retrieve_cmd = app.add_subcommand("retrieve", "Privately retrieve records from a store");
  retrieve_cmd->add_option("--store,--in", f.in, "Store file")->required();
  retrieve_cmd->add_option("--scheme", f.scheme, "Retrieval scheme")->check(schemes);
  retrieve_cmd->add_option("--desired", f.desired, "1-based record indices")->required()->delimiter(',');
  retrieve_cmd->add_flag("--oracle", f.oracle, "Cross-check with the decodability oracle");
  add_seed(retrieve_cmd);
  add_json(retrieve_cmd);

  auto* repair = app.add_subcommand("repair", "Repair one node of a store in place");
  repair->add_option("--store,--in", f.in, "Store file")->required();
  repair->add_option("--node", f.node, "1-based node index")->required();
  repair->add_option("--helpers", f.helpers, "1-based helper nodes (default: lowest alive)")->delimiter(',');
  add_json(repair);

  auto* metrics_cmd = app.add_subcommand("metrics", "Print SO, cPoP, RR and the trade-off identity");
  add_code(metrics_cmd);
  add_json(metrics_cmd);

  auto* verify = app.add_subcommand("verify", "Run the invariant suite for one parameter set");
  add_code(verify);
  verify->add_option("--m", f.m, "Number of records")->check(CLI::PositiveNumber);
  verify->add_option("--q", f.q, "Field modulus");
  verify->add_option("--trials", f.trials, "Retrieval trials");
  add_seed(verify);
  add_json(verify);

  auto* ex1 = app.add_subcommand("example1", "Reproduce the (10,3,4,2,1,6) MSR example over F_13");
  auto* ex2 = app.add_subcommand("example2", "Reproduce the (8,3,4,2,1,6) MSR example with d = k");
  for (auto* sub : {ex1, ex2}) {
    sub->add_option("--trials", f.trials, "Retrieval trials");
    add_seed(sub);
    add_json(sub);
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    const auto selected = app.get_subcommands();
    err << (selected.empty() ? app.help() : selected.front()->help());
    return kExitUsage;
  }

  try {
    if (encode->parsed()) return cmd_encode(f, out);
    if (retrieve_cmd->parsed()) return cmd_retrieve(f, out);
    if (repair->parsed()) return cmd_repair(f, out);
    if (metrics_cmd->parsed()) return cmd_metrics(f, out);
    if (verify->parsed()) return cmd_verify(f, out);
    if (ex1->parsed()) return cmd_example(1, f, out);
    if (ex2->parsed()) return cmd_example(2, f, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitUsage;
}

}  // namespace pmpir::cli
