#pragma once

#include "tuplechain/etc_classifier.hpp"

#include <absl/container/flat_hash_map.h>
#include <absl/container/inlined_vector.h>

#include <memory>
#include <span>
#include <vector>

namespace tuplechain {

/// Best match by scanning every rule. probes = rules scanned.
MatchResult linear_lookup(std::span<const Rule> rules, const FieldVector& key);

/// Exhaustive scan over a mutable rule list; the ground-truth oracle.
class LinearClassifier {
 public:
  explicit LinearClassifier(FieldSchema schema) : schema_(std::move(schema)) {}
  static LinearClassifier build(FieldSchema schema, std::span<const Rule> rules);

  MatchResult lookup(const FieldVector& key) const { return linear_lookup(rules_, key); }
  void insert(const Rule& r);
  bool remove(const Rule& r);

  std::size_t rule_count() const { return rules_.size(); }
  std::span<const Rule> rules() const { return rules_; }
  std::size_t memory_bytes() const;

 private:
  FieldSchema schema_;
  std::vector<Rule> rules_;
  absl::flat_hash_map<RuleId, std::size_t> index_;
};

/// Plain tuple space search: one hash probe in every tuple, no pruning.
/// Tuples are visited in MaskOrder.
class TssClassifier {
 public:
  struct Table {
    Mask mask;
    absl::flat_hash_map<FieldVector, absl::InlinedVector<Rule, 1>, detail::KeyHash, detail::KeyEq> entries;
    std::size_t rule_count = 0;
  };

  explicit TssClassifier(FieldSchema schema) : schema_(std::move(schema)) {}
  static TssClassifier build(FieldSchema schema, std::span<const Rule> rules);

  MatchResult lookup(const FieldVector& key) const;
  void insert(const Rule& r);
  bool remove(const Rule& r);

  std::size_t rule_count() const { return ids_.size(); }
  std::size_t tuple_count() const { return tables_.size(); }
  const std::vector<std::unique_ptr<Table>>& tables() const { return tables_; }
  std::size_t memory_bytes() const;

 private:
  FieldSchema schema_;
  std::vector<std::unique_ptr<Table>> tables_;
  absl::flat_hash_set<RuleId> ids_;
};

}  // namespace tuplechain
