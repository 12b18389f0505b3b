#pragma once

#include "tuplechain/field.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>

namespace tuplechain {

using Priority = std::int64_t;
using RuleId = std::uint64_t;

/// Priority reported by a miss. No stored rule may carry it.
inline constexpr Priority kMissPriority = std::numeric_limits<Priority>::min();

/// A d-field wildcard rule. `fields` has no bits outside `mask`.
struct Rule {
  FieldVector fields;
  Mask mask;
  Priority priority = 0;
  RuleId id = 0;

  friend bool operator==(const Rule&, const Rule&) = default;
};

/// Outcome of one lookup. `probes` counts tuple hash probes.
struct MatchResult {
  std::optional<RuleId> rule;
  Priority priority = kMissPriority;
  std::uint64_t probes = 0;

  bool hit() const { return rule.has_value(); }
  static MatchResult of(const Rule* r, std::uint64_t probes = 0) {
    return r ? MatchResult{r->id, r->priority, probes} : MatchResult{std::nullopt, kMissPriority, probes};
  }

  /// Keep the better of the two identities and add up the probes.
  void merge(const MatchResult& other);

  /// Same identity (rule and priority), ignoring probe counts.
  bool same_match(const MatchResult& other) const {
    return rule == other.rule && priority == other.priority;
  }
};

/// Higher priority wins; equal priorities go to the smaller id.
inline bool outranks(Priority pa, RuleId ia, Priority pb, RuleId ib) {
  return pa != pb ? pa > pb : ia < ib;
}
inline bool outranks(const Rule& a, const Rule& b) { return outranks(a.priority, a.id, b.priority, b.id); }

/// Preferred of two optional rules; nullptr is a miss and loses to any rule.
inline const Rule* better(const Rule* a, const Rule* b) {
  if (!a) return b;
  if (!b) return a;
  return outranks(*b, *a) ? b : a;
}

/// Preferred of two results by identity; probes are taken from the winner.
const MatchResult& better(const MatchResult& a, const MatchResult& b);

/// out[i] = v[i] & m[i]
FieldVector apply_mask(const FieldVector& v, const Mask& m);

/// key & mask == fields on every word.
bool matches(const FieldVector& key, const Rule& rule);

/// Strict tuple order: every set bit of a is set in b and a != b.
bool mask_less_than(const Mask& a, const Mask& b);

/// Bitwise subset, non-strict.
bool mask_subset(const Mask& a, const Mask& b);

/// Field-wise AND of two masks.
Mask intersect(const Mask& a, const Mask& b);

/// Throws std::invalid_argument when the rule does not fit the schema,
/// has bits outside its mask, or uses the miss priority.
void validate_rule(const FieldSchema& schema, const Rule& rule);

/// Seeded 64-bit hash over mask-canonical key words.
std::uint64_t hash_words(std::span<const std::uint64_t> words);
/// Hash of (key & mask) computed without materialising the masked key.
std::uint64_t hash_masked(std::span<const std::uint64_t> key, std::span<const std::uint64_t> mask);

std::string describe(const FieldSchema& schema, const Rule& rule);

}  // namespace tuplechain
