#pragma once

#include "tuplechain/chain.hpp"
#include "tuplechain/path_cover.hpp"

#include <absl/container/flat_hash_map.h>
#include <absl/container/node_hash_map.h>

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace tuplechain {

/// Quantities of a built TupleChain structure.
struct StructureStats {
  std::size_t rule_count = 0;        // n
  std::size_t tuple_count = 0;       // m
  std::size_t chain_count = 0;       // l
  std::size_t max_chain_rules = 0;   // n'
  std::size_t max_chain_tuples = 0;  // m'
  std::vector<std::size_t> chain_tuple_counts;  // m_i
  std::size_t entry_total = 0;
  std::size_t owner_link_total = 0;
  std::size_t memory_bytes = 0;
  CoverQuality bounds;
};

/// TupleChain classifier: tuples grouped into chains, each chain searched by
/// binary branching on hit/miss, results folded across chains.
class TupleChainClassifier {
 public:
  explicit TupleChainClassifier(FieldSchema schema);
  explicit TupleChainClassifier(std::shared_ptr<const FieldSchema> schema);
  TupleChainClassifier(TupleChainClassifier&&) noexcept = default;
  TupleChainClassifier& operator=(TupleChainClassifier&&) noexcept = default;

  /// Builds with a minimum path cover over the rules' masks, then fills the
  /// chains head to tail. Throws std::invalid_argument naming the index of
  /// the first malformed or duplicate rule.
  static TupleChainClassifier build(std::shared_ptr<const FieldSchema> schema, std::span<const Rule> rules);
  static TupleChainClassifier build(FieldSchema schema, std::span<const Rule> rules) {
    return build(std::make_shared<const FieldSchema>(std::move(schema)), rules);
  }

  const FieldSchema& schema() const { return *schema_; }

  MatchResult lookup(const FieldVector& key) const;

  /// Throws std::invalid_argument for malformed rules or a duplicate id.
  void insert(const Rule& r);
  /// Removes the stored rule equal to r. Returns false if there is none.
  bool remove(const Rule& r);

  /// Chain a new tuple with mask m would be placed on: the shortest chain
  /// that can host it, then the one with fewer rules, then the older chain.
  /// nullopt means a new chain would be opened.
  std::optional<std::uint64_t> choose_chain(const Mask& m) const;

  /// Re-lays the chains out from the current rules with a fresh minimum path
  /// cover.
  void rebuild();

  std::size_t rule_count() const { return rules_.size(); }
  std::size_t tuple_count() const { return registry_.size(); }
  std::size_t chain_count() const { return chains_.size(); }
  bool empty() const { return rules_.empty(); }

  /// Sum over chains of 1 + floor(log2 m_i): the most probes any lookup can take.
  std::uint64_t probe_bound() const { return probe_bound_; }

  const Rule* find_rule(RuleId id) const;
  std::vector<Rule> rules() const;
  const std::vector<std::unique_ptr<Chain>>& chains() const { return chains_; }
  const Chain* chain_of(const Mask& m) const;
  Tuple* tuple_of(const Mask& m) const;

  StructureStats stats() const;
  AuditReport audit() const;
  std::size_t memory_bytes() const;
  MaintenanceCounters counters() const;
  void reset_counters();

 private:
  struct Placement {
    Chain* chain = nullptr;
    Tuple* tuple = nullptr;
  };

  Placement place_tuple(const Mask& m);
  Chain& open_chain();
  void drop_chain(const Chain& c);
  void refresh_bound();

  std::shared_ptr<const FieldSchema> schema_;
  absl::node_hash_map<RuleId, Rule> rules_;
  std::vector<std::unique_ptr<Chain>> chains_;
  absl::flat_hash_map<Mask, Placement> registry_;
  std::uint64_t next_chain_id_ = 0;
  std::uint64_t probe_bound_ = 0;
};

}  // namespace tuplechain
