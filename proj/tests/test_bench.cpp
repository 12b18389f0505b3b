#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"
#include "tuplechain/bench.hpp"

using namespace tctest;

namespace {

struct Setup {
  FieldSchema schema{std::vector<unsigned>{32, 32}};
  RuleSetFile rs;
  std::vector<FieldVector> trace;
};

Setup make_setup(std::size_t rules, std::size_t keys) {
  Setup s;
  s.rs = gen_rules(11, rules, s.schema, TupleProfile{30, 1.0, 0.3});
  s.trace = gen_trace(s.rs.rules, s.schema, 12, keys, 0.7);
  return s;
}

}  // namespace

TEST_CASE("a lossless single pass returns what a direct loop returns") {
  const auto s = make_setup(2000, 5000);
  for (Algo a : {Algo::tc, Algo::etc, Algo::tss}) {
    auto m = make_matcher(a, s.schema, s.rs.rules);
    BenchConfig cfg;
    cfg.algo = a;
    cfg.tx_rate = 1e7;
    cfg.duration = 30;
    cfg.trace_passes = 1;
    cfg.lossless = true;
    cfg.record_results = true;
    const auto rep = run_bench(*m, s.trace, nullptr, cfg);
    CHECK(rep.ok());
    CHECK(rep.keys_offered == s.trace.size());
    CHECK(rep.keys_dropped == 0);
    CHECK(rep.lookups == s.trace.size());
    REQUIRE(rep.results.size() == s.trace.size());
    std::uint64_t probes = 0, hits = 0;
    for (std::size_t i = 0; i < s.trace.size(); ++i) {
      const auto want = m->lookup(s.trace[i]);
      CHECK(rep.results[i].same_match(want));
      CHECK(rep.results[i].probes == want.probes);
      probes += want.probes;
      hits += want.hit();
    }
    CHECK(rep.probes_total == probes);
    CHECK(rep.hits == hits);
    CHECK(rep.avg_probes == doctest::Approx(static_cast<double>(probes) / s.trace.size()));
    CHECK(rep.updates_offered == 0);
    CHECK(rep.rule_count == s.rs.rules.size());
  }
}

TEST_CASE("the final state after concurrent updates equals an offline replay") {
  const auto s = make_setup(3000, 2000);
  const auto up = gen_updates(s.rs.rules, s.schema, 13, 3000, 0.5);
  for (Algo a : {Algo::tc, Algo::etc, Algo::tss}) {
    auto m = make_matcher(a, s.schema, s.rs.rules);
    BenchConfig cfg;
    cfg.algo = a;
    cfg.tx_rate = 2e5;
    cfg.update_rate = 2e4;
    cfg.duration = 0.5;
    cfg.lossless = true;
    const auto rep = run_bench(*m, s.trace, &up, cfg);
    CHECK(rep.ok());
    CHECK(rep.update_failures == 0);
    CHECK(rep.updates_dropped == 0);
    REQUIRE(rep.updates_applied > 0);
    REQUIRE(rep.updates_applied <= up.ops.size());

    auto replay = LinearClassifier::build(s.schema, s.rs.rules);
    for (std::size_t i = 0; i < rep.updates_applied; ++i) {
      const auto& op = up.ops[i];
      if (op.kind == UpdateOp::Kind::insert) replay.insert(op.rule);
      else REQUIRE(replay.remove(op.rule));
    }
    CHECK(m->rule_count() == replay.rule_count());
    CHECK(m->audit().clean);
    std::mt19937_64 rng(5);
    const auto keys = mixed_keys(rng, s.schema, std::vector<Rule>(replay.rules().begin(), replay.rules().end()), 3000);
    for (const auto& k : keys) REQUIRE(replay.lookup(k).same_match(m->lookup(k)));
  }
}

TEST_CASE("receive rate never exceeds the offered rate") {
  const auto s = make_setup(1000, 4000);
  auto m = make_matcher(Algo::tc, s.schema, s.rs.rules);
  BenchConfig cfg;
  cfg.tx_rate = 50000;
  cfg.duration = 0.3;
  const auto rep = run_bench(*m, s.trace, nullptr, cfg);
  CHECK(rep.lookups + rep.keys_dropped == rep.keys_offered);
  CHECK(rep.lookups <= rep.keys_offered);
  CHECK(rep.keys_offered <= static_cast<std::uint64_t>(cfg.tx_rate * rep.wall_seconds) + cfg.queue_capacity + 1);
  CHECK(rep.receive_mpps * 1e6 <= rep.offered_rate * 1.05 + 1);
  CHECK(rep.probes_max <= m->lookup_bounded(s.trace[0]).second + 64);
}

TEST_CASE("invalid rates are rejected") {
  const auto s = make_setup(100, 10);
  auto m = make_matcher(Algo::tss, s.schema, s.rs.rules);
  BenchConfig cfg;
  cfg.tx_rate = 0;
  CHECK_THROWS_AS(run_bench(*m, s.trace, nullptr, cfg), std::invalid_argument);
  cfg.tx_rate = 1000;
  cfg.update_rate = -1;
  CHECK_THROWS_AS(run_bench(*m, s.trace, nullptr, cfg), std::invalid_argument);
  cfg.update_rate = 0;
  cfg.duration = -2;
  CHECK_THROWS_AS(run_bench(*m, s.trace, nullptr, cfg), std::invalid_argument);
}

TEST_CASE("audits report injected faults") {
  const auto s = make_setup(2000, 0);
  for (Algo a : {Algo::tc, Algo::etc, Algo::tss, Algo::linear}) {
    const auto out = run_audit(a, s.schema, s.rs.rules, 4);
    CHECK(out.clean);
    CHECK(out.rule_count == s.rs.rules.size());
  }
  for (Fault f : {Fault::hint, Fault::marker, Fault::owner}) {
    const auto out = run_audit(Algo::tc, s.schema, s.rs.rules, 4, f);
    CHECK_FALSE(out.clean);
    CHECK_FALSE(out.violation.empty());
  }
  CHECK(parse_fault("owner") == Fault::owner);
  CHECK_THROWS_AS(parse_fault("x"), std::invalid_argument);
}

TEST_CASE("equivalence on ten thousand rules and keys") {
  const FieldSchema schema({32, 32, 16, 16, 8});
  const auto rs = gen_rules(21, 10000, schema, TupleProfile{80, 1.0, 0.3});
  const auto keys = gen_trace(rs.rules, schema, 22, 10000, 0.8);
  const Algo algos[] = {Algo::tc, Algo::etc, Algo::tss};
  const auto outs = run_equiv(schema, rs.rules, keys, algos, 4);
  REQUIRE(outs.size() == 3);
  for (const auto& o : outs) {
    CHECK(o.ok());
    CHECK(o.lookups == keys.size());
    CHECK_FALSE(o.first.has_value());
  }
  const auto j = to_json(outs.front());
  for (const char* k : {"algo", "lookups", "divergences", "bound_violations"}) CHECK(j.contains(k));
}

TEST_CASE("report json keys are stable") {
  const MetricsReport r;
  const auto j = to_json(r);
  for (const char* k : {"algo", "keys_offered", "keys_dropped", "lookups", "hits", "avg_probes", "probes_max",
                        "bound_violations", "updates_applied", "update_failures", "receive_mpps", "offered_rate",
                        "memory_bytes", "audit_clean"})
    CHECK_MESSAGE(j.contains(k), k);
  CHECK(to_text(r).find("lookups") != std::string::npos);
}
