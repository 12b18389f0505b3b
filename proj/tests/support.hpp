#pragma once

#include "tuplechain/baselines.hpp"

#include <optional>
#include <random>
#include <vector>

namespace tctest {

using namespace tuplechain;

// Field-by-field match, independent of the packed word layout.
inline bool field_match(const FieldSchema& s, const FieldVector& key, const Rule& r) {
  for (std::size_t f = 0; f < s.field_count(); ++f)
    if ((s.get(key, f) & s.get(r.mask.bits(), f)) != s.get(r.fields, f)) return false;
  return true;
}

struct Expect {
  std::optional<RuleId> id;
  Priority priority = kMissPriority;
};

inline Expect scan(const FieldSchema& s, const std::vector<Rule>& rules, const FieldVector& key) {
  Expect best;
  for (const auto& r : rules) {
    if (!field_match(s, key, r)) continue;
    if (!best.id || r.priority > best.priority || (r.priority == best.priority && r.id < *best.id)) {
      best.id = r.id;
      best.priority = r.priority;
    }
  }
  return best;
}

inline bool agrees(const Expect& e, const MatchResult& m) { return e.id == m.rule && e.priority == m.priority; }

inline FieldVector random_key(std::mt19937_64& rng, const FieldSchema& s) {
  std::vector<FieldValue> v(s.field_count());
  for (std::size_t f = 0; f < v.size(); ++f) {
    FieldValue x = (FieldValue{rng()} << 64) | rng();
    v[f] = x & s.field_limit(f);
  }
  return s.make(v);
}

inline FieldVector key_under(std::mt19937_64& rng, const FieldSchema& s, const Rule& r) {
  std::vector<FieldValue> v(s.field_count());
  const FieldVector noise = random_key(rng, s);
  for (std::size_t f = 0; f < v.size(); ++f)
    v[f] = s.get(r.fields, f) | (s.get(noise, f) & ~s.get(r.mask.bits(), f) & s.field_limit(f));
  return s.make(v);
}

// Prefix-style mask per field drawn from a small menu of lengths so tuples
// collide and nest often.
inline Mask menu_mask(std::mt19937_64& rng, const FieldSchema& s, unsigned menu) {
  std::vector<unsigned> len(s.field_count());
  for (std::size_t f = 0; f < len.size(); ++f) {
    const unsigned w = s.width(f);
    const unsigned pick = std::uniform_int_distribution<unsigned>(0, menu)(rng);
    len[f] = w * pick / menu;
  }
  return s.prefix_mask(len);
}

inline Rule rule_on(std::mt19937_64& rng, const FieldSchema& s, const Mask& m, RuleId id, Priority pmax) {
  Rule r;
  r.mask = m;
  r.fields = apply_mask(random_key(rng, s), m);
  r.priority = std::uniform_int_distribution<Priority>(0, pmax)(rng);
  r.id = id;
  return r;
}

inline std::vector<Rule> random_rules(std::mt19937_64& rng, const FieldSchema& s, std::size_t n, std::size_t masks,
                                      unsigned menu = 4) {
  std::vector<Mask> pool;
  for (std::size_t i = 0; i < masks; ++i) pool.push_back(menu_mask(rng, s, menu));
  std::vector<Rule> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(rule_on(rng, s, pool[std::uniform_int_distribution<std::size_t>(0, masks - 1)(rng)], i,
                          static_cast<Priority>(n / 2 + 1)));
  return out;
}

// Mix of keys: half drawn under random rules, half uniform.
inline std::vector<FieldVector> mixed_keys(std::mt19937_64& rng, const FieldSchema& s, const std::vector<Rule>& rules,
                                           std::size_t n) {
  std::vector<FieldVector> keys;
  for (std::size_t i = 0; i < n; ++i) {
    if (!rules.empty() && (i & 1))
      keys.push_back(key_under(rng, s, rules[std::uniform_int_distribution<std::size_t>(0, rules.size() - 1)(rng)]));
    else
      keys.push_back(random_key(rng, s));
  }
  return keys;
}

inline Rule make_rule(const FieldSchema& s, std::initializer_list<FieldValue> fields,
                      std::initializer_list<FieldValue> mask, Priority pri, RuleId id) {
  Rule r;
  r.fields = s.make(std::vector<FieldValue>(fields));
  r.mask = s.make_mask(std::vector<FieldValue>(mask));
  r.priority = pri;
  r.id = id;
  return r;
}

}  // namespace tctest
