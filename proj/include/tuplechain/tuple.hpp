#pragma once

#include "tuplechain/rule.hpp"

#include <absl/container/flat_hash_set.h>
#include <absl/container/inlined_vector.h>

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace tuplechain {

/// One slot of a tuple's hash table.
///
/// An entry carries the rule(s) stored at its key, the hint (the best rule
/// along its marker path, itself included), its marker in the preceding
/// tuple of the chain and the entries of the succeeding tuple that use it
/// as their marker. Rules sharing an identical (fields, mask) pair are kept
/// best-first; only the front one takes part in hints.
struct Entry {
  FieldVector key;
  absl::InlinedVector<const Rule*, 1> rules;
  const Rule* hint = nullptr;
  Entry* marker = nullptr;
  std::vector<Entry*> owners;
  std::uint32_t owner_slot = 0;  // position of this entry in marker->owners

  explicit Entry(FieldVector k) : key(std::move(k)) {}

  const Rule* rule() const { return rules.empty() ? nullptr : rules.front(); }
  bool is_marker() const { return !owners.empty(); }
};

/// Counts entries visited by marker and hint maintenance.
struct MaintenanceCounters {
  std::uint64_t marker_touches = 0;
  std::uint64_t hint_touches = 0;

  std::uint64_t total() const { return marker_touches + hint_touches; }
  MaintenanceCounters& operator+=(const MaintenanceCounters& o) {
    marker_touches += o.marker_touches;
    hint_touches += o.hint_touches;
    return *this;
  }
};

namespace detail {

struct MaskedKey {
  std::span<const std::uint64_t> key;
  std::span<const std::uint64_t> mask;
};

struct EntryHash {
  using is_transparent = void;
  std::size_t operator()(const std::unique_ptr<Entry>& e) const { return hash_words(e->key.words()); }
  std::size_t operator()(const FieldVector& k) const { return hash_words(k.words()); }
  std::size_t operator()(const MaskedKey& k) const { return hash_masked(k.key, k.mask); }
};

struct EntryEq {
  using is_transparent = void;

  static bool equal(const FieldVector& a, const FieldVector& b) { return a == b; }
  static bool equal(const FieldVector& a, const MaskedKey& b) {
    auto w = a.words();
    if (w.size() != b.key.size()) return false;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i] != (b.key[i] & b.mask[i])) return false;
    return true;
  }
  static const FieldVector& key_of(const std::unique_ptr<Entry>& e) { return e->key; }

  bool operator()(const std::unique_ptr<Entry>& a, const std::unique_ptr<Entry>& b) const {
    return a->key == b->key;
  }
  bool operator()(const std::unique_ptr<Entry>& a, const FieldVector& b) const { return a->key == b; }
  bool operator()(const FieldVector& a, const std::unique_ptr<Entry>& b) const { return a == b->key; }
  bool operator()(const std::unique_ptr<Entry>& a, const MaskedKey& b) const { return equal(a->key, b); }
  bool operator()(const MaskedKey& a, const std::unique_ptr<Entry>& b) const { return equal(b->key, a); }
};

}  // namespace detail

/// All rules sharing one mask, stored in a hash table keyed by the
/// mask-canonical field vector. prev/next are the chain-order neighbours and
/// are maintained by the owning Chain.
class Tuple {
 public:
  explicit Tuple(Mask mask) : mask_(std::move(mask)) {}
  Tuple(const Tuple&) = delete;
  Tuple& operator=(const Tuple&) = delete;

  const Mask& mask() const { return mask_; }
  Tuple* prev() const { return prev_; }
  Tuple* next() const { return next_; }

  /// One hash probe with the full (unmasked) key.
  Entry* probe(const FieldVector& key) const;
  /// Lookup by an already mask-canonical key.
  Entry* find(const FieldVector& canonical_key) const;
  std::pair<Entry*, bool> find_or_create(FieldVector canonical_key);
  /// Removes an entry that holds no rule, no owners and no marker link.
  void erase(Entry* e);

  /// Stores r in e, best-first. Returns true when e's front rule changed.
  bool add_rule(Entry& e, const Rule& r);
  /// Removes r from e. Returns {found, front rule changed}.
  std::pair<bool, bool> remove_rule(Entry& e, const Rule& r);

  std::size_t entry_count() const { return table_.size(); }
  /// Entries holding at least one rule.
  std::size_t rule_count() const { return rule_entries_; }
  /// Rules stored, including ones shadowed by an identical key.
  std::size_t stored_rules() const { return stored_rules_; }

  template <typename F>
  void for_each_entry(F&& f) const {
    for (const auto& e : table_) f(*e);
  }
  std::vector<Entry*> entries() const;

  std::size_t memory_bytes() const;

 private:
  friend class Chain;

  Mask mask_;
  absl::flat_hash_set<std::unique_ptr<Entry>, detail::EntryHash, detail::EntryEq> table_;
  std::size_t rule_entries_ = 0;
  std::size_t stored_rules_ = 0;
  Tuple* prev_ = nullptr;
  Tuple* next_ = nullptr;
};

void attach_owner(Entry& marker, Entry& owner);
void detach_owner(Entry& marker, Entry& owner);

/// Hint an entry should carry: better(rule, marker hint).
inline const Rule* inherited_hint(const Entry& e) {
  return better(e.rule(), e.marker ? e.marker->hint : nullptr);
}

/// Finds or creates e's marker in `target` (the tuple preceding e's tuple),
/// recursing towards the chain head for every marker it has to create.
/// Returns the marker, or nullptr when target is absent.
Entry* leave_marker(Entry& e, Tuple* target, MaintenanceCounters& counters);

/// e's marker in `target`, without creating anything.
Entry* obtain_marker(const Entry& e, const Tuple* target);

/// Pushes e's hint down its owner tree, stopping wherever a hint does not
/// change.
void report_hint(Entry& e, MaintenanceCounters& counters);

/// Unlinks e from its marker in `target` and erases the marker trail that
/// is left without rules or owners.
void delete_marker(Entry& e, Tuple* target, MaintenanceCounters& counters);

/// Erases k (living in t) if it holds no rule and has no owners, then keeps
/// going towards the head while the markers above become orphaned too.
void prune_markers(Entry* k, Tuple* t, MaintenanceCounters& counters);

}  // namespace tuplechain
