#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

using namespace tctest;

TEST_CASE("chains merged under one head share a masked entry") {
  const FieldSchema s({8, 8});
  const std::vector<Rule> rules = {
      make_rule(s, {0x00, 0x80}, {0x80, 0xC0}, 10, 1),  // r1
      make_rule(s, {0x00, 0xC0}, {0xC0, 0xF0}, 20, 2),  // r2
      make_rule(s, {0x20, 0x80}, {0xE0, 0x80}, 25, 5),  // r5
      make_rule(s, {0x20, 0xA8}, {0xE0, 0xFC}, 30, 6),  // r6
  };
  const auto etc = EtcClassifier::build(s, rules, EtcOptions{2});
  REQUIRE(etc.audit().clean);
  REQUIRE(etc.group_count() == 1);
  const auto& g = *etc.groups().front();
  CHECK(g.head_mask == s.make_mask(std::vector<FieldValue>{0x80, 0x80}));
  REQUIRE(g.heads.size() == 1);
  const auto& [key, local] = *g.heads.begin();
  CHECK(key == s.make(std::vector<FieldValue>{0x00, 0x80}));
  CHECK(local->rule_count() == 4);

  for (const auto& r : rules) CHECK(apply_mask(r.fields, g.head_mask) == key);
  const FieldVector pkt = s.make(std::vector<FieldValue>{0x2F, 0xAB});
  const auto [res, bound] = etc.lookup_bounded(pkt);
  CHECK(agrees(scan(s, rules, pkt), res));
  CHECK(res.probes <= bound);

  // A higher head threshold keeps the two chains apart.
  const auto split = EtcClassifier::build(s, rules, EtcOptions{3});
  CHECK(split.group_count() == 2);
  CHECK(split.audit().clean);
}

TEST_CASE("grouping plans partition the cover and respect the head threshold") {
  std::mt19937_64 rng(19);
  for (int round = 0; round < 40; ++round) {
    const FieldSchema s({16, 16});
    std::vector<Mask> masks;
    absl::flat_hash_set<Mask> seen;
    while (masks.size() < 30) {
      Mask m = menu_mask(rng, s, 16);
      if (seen.insert(m).second) masks.push_back(m);
    }
    const auto g = build_graph(masks);
    const auto cover = min_path_cover(g);
    const unsigned min_bits = round % 8;
    const auto plans = group_chains(g, cover, min_bits);
    std::vector<int> hit(masks.size(), 0);
    std::size_t chains = 0;
    for (const auto& p : plans) {
      Mask head = g.masks[p.vertices.front()];
      for (auto v : p.vertices) {
        ++hit[v];
        head = intersect(head, g.masks[v]);
      }
      CHECK(head == p.head_mask);
      if (p.chains > 1) CHECK(p.head_mask.popcount() >= min_bits);
      chains += p.chains;
    }
    for (int h : hit) CHECK(h == 1);
    CHECK(chains == cover.chain_count());
    CHECK(plans.size() <= cover.chain_count());
  }
}

TEST_CASE("lookups agree with the oracle through inserts and deletes") {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 10; ++round) {
    const FieldSchema s = round % 2 ? FieldSchema({32, 32, 16, 16, 8}) : FieldSchema({8, 8});
    auto rules = random_rules(rng, s, 300 + 100 * round, 20, 4);
    EtcClassifier etc = EtcClassifier::build(s, rules, EtcOptions{static_cast<unsigned>(round % 5)});
    REQUIRE(etc.audit().clean);
    std::vector<Mask> pool;
    for (const auto& r : rules) pool.push_back(r.mask);
    for (int i = 0; i < 5; ++i) pool.push_back(menu_mask(rng, s, 4));
    RuleId id = rules.size();
    for (int op = 0; op < 400; ++op) {
      if (!rules.empty() && std::bernoulli_distribution(0.5)(rng)) {
        const std::size_t j = std::uniform_int_distribution<std::size_t>(0, rules.size() - 1)(rng);
        REQUIRE(etc.remove(rules[j]));
        rules[j] = rules.back();
        rules.pop_back();
      } else {
        const Rule r = rule_on(rng, s, pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)], id++, 200);
        etc.insert(r);
        rules.push_back(r);
      }
      if (op % 40 == 0) {
        const auto a = etc.audit();
        REQUIRE_MESSAGE(a.clean, a.violation);
        for (const auto& k : mixed_keys(rng, s, rules, 100)) {
          const auto [got, bound] = etc.lookup_bounded(k);
          REQUIRE(agrees(scan(s, rules, k), got));
          CHECK(got.probes <= bound);
        }
      }
    }
    CHECK(etc.rule_count() == rules.size());
    for (const auto& r : rules) REQUIRE(etc.remove(r));
    CHECK(etc.group_count() == 0);
    CHECK(etc.audit().clean);
    CHECK(etc.memory_bytes() > 0);
  }
}

TEST_CASE("insert rejects duplicates and bad rules") {
  const FieldSchema s({8});
  EtcClassifier etc(s);
  etc.insert(make_rule(s, {0x10}, {0xF0}, 1, 1));
  CHECK_THROWS_AS(etc.insert(make_rule(s, {0x20}, {0xF0}, 1, 1)), std::invalid_argument);
  CHECK_THROWS_AS(etc.insert(make_rule(s, {0x21}, {0xF0}, 1, 2)), std::invalid_argument);
  CHECK_FALSE(etc.remove(make_rule(s, {0x20}, {0xF0}, 1, 9)));
}
