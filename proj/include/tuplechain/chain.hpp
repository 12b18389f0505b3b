#pragma once

#include "tuplechain/tuple.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tuplechain {

/// First structural violation found by an audit, or clean.
struct AuditReport {
  bool clean = true;
  std::string violation;

  static AuditReport ok() { return {}; }
  static AuditReport fail(std::string what) { return {false, std::move(what)}; }
  explicit operator bool() const { return clean; }
};

/// floor(log2 n) for n >= 1.
unsigned floor_log2(std::uint64_t n);

/// A sequence of tuples, strictly increasing under mask_less_than, searched
/// as a binary search tree: a hit moves to the more specific half ("succ"),
/// a miss to the less specific half ("fail").
///
/// The tree is kept perfectly balanced (it is rebuilt from chain order on
/// every tuple insert/remove), so a lookup probes at most
/// 1 + floor(log2 m_c) tuples. Markers hang off prev/next and are unaffected
/// by the tree shape.
class Chain {
 public:
  struct SearchNode {
    Tuple* tuple = nullptr;
    std::int32_t fail = -1;
    std::int32_t succ = -1;
  };

  explicit Chain(std::uint64_t id) : id_(id) {}
  Chain(const Chain&) = delete;
  Chain& operator=(const Chain&) = delete;

  std::uint64_t id() const { return id_; }
  std::size_t tuple_count() const { return order_.size(); }
  /// Rules stored on the chain (n_c).
  std::size_t rule_count() const { return rule_count_; }
  bool empty() const { return order_.empty(); }

  Tuple& tuple(std::size_t pos) const { return *order_.at(pos); }
  std::optional<std::size_t> position_of(const Tuple& t) const;

  MatchResult lookup(const FieldVector& key) const;
  /// 1 + floor(log2 m_c), or 0 for an empty chain.
  std::uint64_t probe_bound() const;

  /// Stores r in t (which must belong to this chain and share r's mask).
  /// Throws std::invalid_argument on a duplicate rule id at that key.
  void insert_rule(Tuple& t, const Rule& r);
  /// Returns whether r was found and removed. Leaves t in place even when
  /// it no longer holds rules; see retire_tuple.
  bool delete_rule(Tuple& t, const Rule& r);

  /// Position at which a tuple with mask m keeps the chain strictly
  /// increasing, if any.
  std::optional<std::size_t> can_host(const Mask& m) const;
  /// Splices an empty tuple in at `at` and re-anchors the markers of its
  /// successor's entries through it.
  Tuple& insert_tuple(std::unique_ptr<Tuple> t, std::size_t at);
  /// Unsplices a tuple without entries.
  void remove_tuple(Tuple& t);
  /// Removes a tuple that holds no rules: the owners of its (pure marker)
  /// entries are re-pointed at the markers one tuple further up, then the
  /// emptied tuple is removed. Hints are unaffected.
  void retire_tuple(Tuple& t);

  AuditReport audit() const;

  std::size_t entry_total() const;
  std::size_t owner_link_total() const;
  std::size_t memory_bytes() const;
  std::size_t tree_height() const { return height_; }
  /// Tuples in search-tree in-order.
  std::vector<const Tuple*> in_order() const;
  const std::vector<SearchNode>& tree() const { return tree_; }

  const MaintenanceCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = {}; }

 private:
  void relink();
  void rebuild_tree();
  std::int32_t build_subtree(std::size_t lo, std::size_t hi, std::size_t depth);

  std::uint64_t id_;
  std::vector<std::unique_ptr<Tuple>> order_;
  std::vector<SearchNode> tree_;
  std::size_t height_ = 0;
  std::size_t rule_count_ = 0;
  MaintenanceCounters counters_;
};

}  // namespace tuplechain
