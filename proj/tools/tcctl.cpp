#include "tuplechain/bench.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>

using namespace tuplechain;

namespace {

struct Options {
  std::string algo = "tc";
  std::string rules;
  std::string format = "generic";
  std::string trace;
  std::string updates;
  double tx_rate = 1e9;
  double update_rate = 0;
  double duration = 1.0;
  std::uint64_t seed = 1;
  unsigned min_head_bits = 4;
  std::string report = "text";
  std::string out;

  std::size_t keys = 10000;
  double hit_ratio = 0.8;
  std::size_t passes = 0;
  bool lossless = false;
  std::string fault = "none";

  std::size_t count = 1000;
  std::size_t fields = 2;
  unsigned width = 32;
  std::size_t masks = 50;
  double skew = 1.0;
  double density = 0.3;
  std::string style = "lineage";
  std::size_t update_count = 0;
  double insert_ratio = 0.5;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--rules", o.rules, "rule set file")->required();
  app->add_option("--format", o.format, "rule file format")->check(CLI::IsMember({"classbench", "generic"}));
  app->add_option("--min-head-bits", o.min_head_bits, "smallest head mask popcount a group merge may produce");
  app->add_option("--report", o.report, "report format")->check(CLI::IsMember({"text", "json"}));
  app->add_option("--out", o.out, "write the report here instead of stdout");
}

void add_algo(CLI::App* app, Options& o) {
  app->add_option("--algo", o.algo, "tc, etc, tss or linear")->check(CLI::IsMember({"tc", "etc", "tss", "linear"}));
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    write_text_file(o.out, text);
  }
}

std::vector<FieldVector> load_keys(const Options& o, const RuleSetFile& rs) {
  std::vector<FieldVector> keys;
  if (o.trace.empty()) return gen_trace(rs.rules, rs.schema, o.seed, o.keys, o.hit_ratio);
  for (auto& k : parse_trace(o.trace, rs.schema)) keys.push_back(std::move(k.key));
  return keys;
}

int cmd_build(const Options& o) {
  const auto rs = load_rules(o.rules, o.format);
  const auto t0 = std::chrono::steady_clock::now();
  auto m = make_matcher(parse_algo(o.algo), rs.schema, rs.rules, {o.min_head_bits});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto audit = m->audit();
  nlohmann::json j = {{"algo", o.algo},
                      {"source_rules", rs.source_rules},
                      {"rules", m->rule_count()},
                      {"expansion_factor", rs.expansion_factor},
                      {"tuples", m->tuple_count()},
                      {"memory_bytes", m->memory_bytes()},
                      {"build_seconds", secs},
                      {"audit_clean", audit.clean},
                      {"audit_violation", audit.violation}};
  if (o.report == "json") {
    emit(o, j.dump(2));
  } else {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "algo        %s\nrules       %zu (from %zu source lines, expansion %.3f)\ntuples      %zu\n"
                  "memory      %zu bytes\nbuild time  %.3f s\naudit       %s%s\n",
                  o.algo.c_str(), m->rule_count(), rs.source_rules, rs.expansion_factor, m->tuple_count(),
                  m->memory_bytes(), secs, audit.clean ? "clean" : "FAILED: ", audit.violation.c_str());
    emit(o, buf);
  }
  return audit.clean ? 0 : 1;
}

int cmd_bench(const Options& o) {
  const auto rs = load_rules(o.rules, o.format);
  const auto keys = load_keys(o, rs);
  std::optional<UpdateStream> updates;
  if (!o.updates.empty()) {
    updates = parse_updates(o.updates);
    if (!(updates->schema == rs.schema)) throw std::invalid_argument("update stream schema differs from the rule set");
  }
  BenchConfig cfg;
  cfg.algo = parse_algo(o.algo);
  cfg.tx_rate = o.tx_rate;
  cfg.update_rate = o.update_rate;
  cfg.duration = o.duration;
  cfg.trace_passes = o.passes;
  cfg.lossless = o.lossless;
  auto m = make_matcher(cfg.algo, rs.schema, rs.rules, {o.min_head_bits});
  const auto rep = run_bench(*m, keys, updates ? &*updates : nullptr, cfg);
  emit(o, o.report == "json" ? to_json(rep).dump(2) : to_text(rep));
  return rep.ok() ? 0 : 1;
}

int cmd_audit(const Options& o) {
  const auto rs = load_rules(o.rules, o.format);
  std::vector<Algo> algos;
  if (o.algo == "all") algos = {Algo::tc, Algo::etc, Algo::tss};
  else algos = {parse_algo(o.algo)};
  const Fault fault = parse_fault(o.fault);
  bool clean = true;
  nlohmann::json j = nlohmann::json::array();
  std::string text;
  for (Algo a : algos) {
    const auto r = run_audit(a, rs.schema, rs.rules, o.min_head_bits, a == Algo::tc ? fault : Fault::none);
    clean = clean && r.clean;
    j.push_back(to_json(r));
    text += r.algo + ": " + (r.clean ? "clean" : "VIOLATION: " + r.violation) + " (" + std::to_string(r.rule_count) +
            " rules, " + std::to_string(r.tuple_count) + " tuples)\n";
  }
  emit(o, o.report == "json" ? j.dump(2) : text);
  return clean ? 0 : 1;
}

int cmd_equiv(const Options& o) {
  const auto rs = load_rules(o.rules, o.format);
  std::vector<FieldVector> keys;
  std::size_t expectation_mismatches = 0;
  if (o.trace.empty()) {
    keys = gen_trace(rs.rules, rs.schema, o.seed, o.keys, o.hit_ratio);
  } else {
    for (auto& k : parse_trace(o.trace, rs.schema)) {
      if (k.expected && linear_lookup(rs.rules, k.key).priority != *k.expected) ++expectation_mismatches;
      keys.push_back(std::move(k.key));
    }
  }
  const Algo algos[] = {Algo::tc, Algo::etc, Algo::tss};
  const auto res = run_equiv(rs.schema, rs.rules, keys, algos, o.min_head_bits);
  bool ok = expectation_mismatches == 0;
  nlohmann::json j = {{"keys", keys.size()}, {"trace_expectation_mismatches", expectation_mismatches}};
  std::string text = "keys " + std::to_string(keys.size()) + "\n";
  if (expectation_mismatches)
    text += "trace expectations contradicted by the oracle: " + std::to_string(expectation_mismatches) + "\n";
  for (const auto& e : res) {
    ok = ok && e.ok();
    j["results"].push_back(to_json(e));
    text += e.algo + ": " + std::to_string(e.divergences) + " divergences, " + std::to_string(e.bound_violations) +
            " bound violations";
    if (e.first) {
      auto side = [](const MatchResult& r) {
        return r.hit() ? "rule " + std::to_string(*r.rule) + " pri " + std::to_string(r.priority) : std::string("miss");
      };
      text += "; first at key " + std::to_string(e.first->key_index) + ": expected " + side(e.first->expected) +
              ", got " + side(e.first->got);
    }
    text += "\n";
  }
  j["ok"] = ok;
  emit(o, o.report == "json" ? j.dump(2) : text);
  return ok ? 0 : 1;
}

int cmd_gen(const Options& o) {
  TupleProfile p;
  p.mask_count = o.masks;
  p.skew = o.skew;
  p.density = o.density;
  p.style = parse_style(o.style);
  const auto schema = FieldSchema::uniform(o.fields, o.width);
  const auto rs = gen_rules(o.seed, o.count, schema, p);
  write_generic(rs.schema, rs.rules, o.out);
  if (!o.trace.empty()) {
    std::vector<TraceKey> keys;
    for (auto& k : gen_trace(rs.rules, schema, o.seed + 1, o.keys, o.hit_ratio))
      keys.push_back({k, linear_lookup(rs.rules, k).priority});
    write_trace(schema, keys, o.trace);
  }
  if (!o.updates.empty()) write_updates(gen_updates(rs.rules, schema, o.seed + 2, o.update_count, o.insert_ratio), o.updates);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TupleChain flow-table classifier toolkit"};
  app.require_subcommand(1);
  Options o;

  auto* build = app.add_subcommand("build", "build a classifier and report its structure");
  add_algo(build, o);
  add_common(build, o);

  auto* bench = app.add_subcommand("bench", "rate-controlled lookup and update benchmark");
  add_algo(bench, o);
  add_common(bench, o);
  bench->add_option("--trace", o.trace, "trace file; generated from the rules when absent");
  bench->add_option("--updates", o.updates, "update stream file");
  bench->add_option("--tx-rate", o.tx_rate, "keys per second offered");
  bench->add_option("--update-rate", o.update_rate, "updates per second offered");
  bench->add_option("--duration", o.duration, "seconds the sources run");
  bench->add_option("--seed", o.seed, "seed for a generated trace");
  bench->add_option("--keys", o.keys, "generated trace length");
  bench->add_option("--hit-ratio", o.hit_ratio, "generated trace hit ratio");
  bench->add_option("--passes", o.passes, "stop after this many trace passes (0 = run for the duration)");
  bench->add_flag("--lossless", o.lossless, "sources wait on a full queue instead of dropping");

  auto* audit = app.add_subcommand("audit", "build and run every structural audit");
  audit->add_option("--algo", o.algo, "tc, etc, tss, linear or all")
      ->check(CLI::IsMember({"tc", "etc", "tss", "linear", "all"}));
  add_common(audit, o);
  audit->add_option("--inject-fault", o.fault, "corrupt the tc structure before auditing (test hook)")
      ->check(CLI::IsMember({"none", "hint", "marker", "owner"}));

  auto* equiv = app.add_subcommand("equiv", "cross-check tc, etc and tss against the linear oracle");
  add_common(equiv, o);
  equiv->add_option("--trace", o.trace, "trace file; generated from the rules when absent");
  equiv->add_option("--seed", o.seed, "seed for a generated trace");
  equiv->add_option("--keys", o.keys, "generated trace length");
  equiv->add_option("--hit-ratio", o.hit_ratio, "generated trace hit ratio");

  auto* gen = app.add_subcommand("gen", "generate a synthetic rule set in the generic format");
  gen->add_option("--out", o.out, "rule file to write")->required();
  gen->add_option("--seed", o.seed, "generator seed");
  gen->add_option("--count", o.count, "rules");
  gen->add_option("--fields", o.fields, "fields per rule");
  gen->add_option("--width", o.width, "bits per field")->check(CLI::Range(1u, kMaxFieldWidth));
  gen->add_option("--masks", o.masks, "distinct masks");
  gen->add_option("--skew", o.skew, "Zipf exponent of rules per mask");
  gen->add_option("--density", o.density, "mask containment density (lineage style)")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--style", o.style, "mask style")->check(CLI::IsMember({"lineage", "prefix"}));
  gen->add_option("--trace", o.trace, "also write a trace with expected priorities");
  gen->add_option("--keys", o.keys, "trace length");
  gen->add_option("--hit-ratio", o.hit_ratio, "trace hit ratio")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--updates", o.updates, "also write an update stream");
  gen->add_option("--update-count", o.update_count, "update stream length");
  gen->add_option("--insert-ratio", o.insert_ratio, "share of inserts in the update stream")->check(CLI::Range(0.0, 1.0));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) return cmd_build(o);
    if (*bench) return cmd_bench(o);
    if (*audit) return cmd_audit(o);
    if (*equiv) return cmd_equiv(o);
    if (*gen) return cmd_gen(o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
