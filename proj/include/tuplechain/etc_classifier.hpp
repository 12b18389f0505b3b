#pragma once

#include "tuplechain/classifier.hpp"

#include <absl/container/flat_hash_set.h>

#include <memory>
#include <optional>
#include <vector>

namespace tuplechain {

namespace detail {

struct KeyHash {
  using is_transparent = void;
  std::size_t operator()(const FieldVector& k) const { return hash_words(k.words()); }
  std::size_t operator()(const MaskedKey& k) const { return hash_masked(k.key, k.mask); }
};

struct KeyEq {
  using is_transparent = void;
  bool operator()(const FieldVector& a, const FieldVector& b) const { return a == b; }
  bool operator()(const FieldVector& a, const MaskedKey& b) const { return EntryEq::equal(a, b); }
  bool operator()(const MaskedKey& a, const FieldVector& b) const { return EntryEq::equal(b, a); }
};

}  // namespace detail

/// Planned group: the chains merged under one head mask.
struct GroupPlan {
  Mask head_mask;
  std::vector<std::uint32_t> vertices;  // tuple-graph vertices routed here
  std::size_t chains = 0;
};

/// Greedy pairwise merge of chains. Only pairs joined by at least one
/// tuple-graph edge are candidates; they are taken in order of crossing edge
/// count, then popcount of the merged head mask (both descending), and a
/// merge is accepted only if the merged head keeps at least min_head_bits
/// set bits. Chains that never merge become singleton groups.
std::vector<GroupPlan> group_chains(const TupleGraph& graph, const PathCover& cover, unsigned min_head_bits);

struct EtcOptions {
  unsigned min_head_bits = 4;
};

struct EtcStats {
  std::size_t rule_count = 0;
  std::size_t group_count = 0;
  std::size_t head_entry_count = 0;
  std::size_t local_tuple_total = 0;
  std::size_t local_chain_total = 0;
  std::size_t max_local_rules = 0;
  std::size_t memory_bytes = 0;
};

/// Extended TupleChain: each group has a head tuple whose mask is the AND of
/// its members' masks; every head entry fronts a local TupleChain over the
/// rules colliding at that masked key. A lookup probes every head and
/// searches only the local instance behind a hit.
class EtcClassifier {
 public:
  struct Group {
    Mask head_mask;
    absl::flat_hash_map<FieldVector, std::unique_ptr<TupleChainClassifier>, detail::KeyHash, detail::KeyEq> heads;
    absl::flat_hash_map<Mask, std::size_t> member_masks;  // mask -> rules routed here
    std::size_t rule_count = 0;
  };

  explicit EtcClassifier(FieldSchema schema, EtcOptions options = {});

  static EtcClassifier build(FieldSchema schema, std::span<const Rule> rules, EtcOptions options = {});

  const FieldSchema& schema() const { return *schema_; }
  const EtcOptions& options() const { return options_; }

  MatchResult lookup(const FieldVector& key) const;
  /// Lookup plus the probe bound that applies to it: one probe per head and
  /// the local TupleChain bound behind every head hit.
  std::pair<MatchResult, std::uint64_t> lookup_bounded(const FieldVector& key) const;

  void insert(const Rule& r);
  bool remove(const Rule& r);

  std::size_t rule_count() const { return ids_.size(); }
  std::size_t group_count() const { return groups_.size(); }
  const std::vector<std::unique_ptr<Group>>& groups() const { return groups_; }

  EtcStats stats() const;
  AuditReport audit() const;
  std::size_t memory_bytes() const;

 private:
  Group& route(const Mask& m);

  std::shared_ptr<const FieldSchema> schema_;
  EtcOptions options_;
  std::vector<std::unique_ptr<Group>> groups_;
  absl::flat_hash_map<Mask, Group*> mask_to_group_;
  absl::flat_hash_set<RuleId> ids_;
};

}  // namespace tuplechain
