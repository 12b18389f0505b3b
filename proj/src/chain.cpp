#include "tuplechain/chain.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace tuplechain {

unsigned floor_log2(std::uint64_t n) { return n == 0 ? 0 : 63u - static_cast<unsigned>(std::countl_zero(n)); }

std::optional<std::size_t> Chain::position_of(const Tuple& t) const {
  for (std::size_t i = 0; i < order_.size(); ++i)
    if (order_[i].get() == &t) return i;
  return std::nullopt;
}

MatchResult Chain::lookup(const FieldVector& key) const {
  const Rule* best = nullptr;
  std::uint64_t probes = 0;
  std::int32_t node = tree_.empty() ? -1 : 0;
  while (node >= 0) {
    const SearchNode& n = tree_[static_cast<std::size_t>(node)];
    ++probes;
    if (const Entry* e = n.tuple->probe(key)) {
      best = better(best, e->hint);
      node = n.succ;
    } else {
      node = n.fail;
    }
  }
  return MatchResult::of(best, probes);
}

std::uint64_t Chain::probe_bound() const { return order_.empty() ? 0 : 1 + floor_log2(order_.size()); }

void Chain::insert_rule(Tuple& t, const Rule& r) {
  auto [e, fresh] = t.find_or_create(r.fields);
  if (!fresh)
    for (const Rule* x : e->rules)
      if (x->id == r.id) throw std::invalid_argument("duplicate rule id " + std::to_string(r.id));
  if (fresh) leave_marker(*e, t.prev(), counters_);
  const bool front = t.add_rule(*e, r);
  ++rule_count_;
  if (!front) return;
  if (const Rule* h = inherited_hint(*e); h != e->hint) {
    e->hint = h;
    report_hint(*e, counters_);
  }
}

bool Chain::delete_rule(Tuple& t, const Rule& r) {
  Entry* e = t.find(r.fields);
  if (!e) return false;
  auto [found, front] = t.remove_rule(*e, r);
  if (!found) return false;
  --rule_count_;
  if (!e->rule() && e->owners.empty()) {
    delete_marker(*e, t.prev(), counters_);
    t.erase(e);
    return true;
  }
  if (front) {
    if (const Rule* h = inherited_hint(*e); h != e->hint) {
      e->hint = h;
      report_hint(*e, counters_);
    }
  }
  return true;
}

std::optional<std::size_t> Chain::can_host(const Mask& m) const {
  // Tuples below m form a prefix of the chain by transitivity, so only the
  // first tuple not below m needs checking.
  std::size_t pos = 0;
  while (pos < order_.size() && mask_less_than(order_[pos]->mask(), m)) ++pos;
  if (pos < order_.size() && !mask_less_than(m, order_[pos]->mask())) return std::nullopt;
  return pos;
}

Tuple& Chain::insert_tuple(std::unique_ptr<Tuple> t, std::size_t at) {
  if (!t || t->entry_count() != 0) throw std::invalid_argument("only empty tuples can be inserted into a chain");
  if (at > order_.size()) throw std::invalid_argument("tuple position out of range");
  if (at > 0 && !mask_less_than(order_[at - 1]->mask(), t->mask()))
    throw std::invalid_argument("tuple does not follow its predecessor in chain order");
  if (at < order_.size() && !mask_less_than(t->mask(), order_[at]->mask()))
    throw std::invalid_argument("tuple does not precede its successor in chain order");

  Tuple& fresh = *t;
  order_.insert(order_.begin() + static_cast<std::ptrdiff_t>(at), std::move(t));
  relink();
  rebuild_tree();

  Tuple* next = fresh.next();
  if (!next) return fresh;
  for (Entry* e : next->entries()) {
    // Link the new marker before dropping the old one: the new marker's own
    // marker is exactly the old one, so the old trail is never orphaned.
    Entry* old = e->marker;
    if (old) detach_owner(*old, *e);
    leave_marker(*e, &fresh, counters_);
    if (old) prune_markers(old, fresh.prev(), counters_);
    if (const Rule* h = inherited_hint(*e); h != e->hint) {
      e->hint = h;
      report_hint(*e, counters_);
    }
  }
  return fresh;
}

void Chain::remove_tuple(Tuple& t) {
  auto pos = position_of(t);
  if (!pos) throw std::invalid_argument("tuple does not belong to this chain");
  if (t.entry_count() != 0) throw std::invalid_argument("only empty tuples can be removed from a chain");
  order_.erase(order_.begin() + static_cast<std::ptrdiff_t>(*pos));
  relink();
  rebuild_tree();
}

void Chain::retire_tuple(Tuple& t) {
  if (t.stored_rules() != 0) throw std::invalid_argument("cannot retire a tuple that still holds rules");
  Tuple* up_tuple = t.prev();
  for (Entry* k : t.entries()) {
    Entry* up = k->marker;
    while (!k->owners.empty()) {
      Entry* o = k->owners.back();
      ++counters_.marker_touches;
      detach_owner(*k, *o);
      if (up) attach_owner(*up, *o);
    }
    if (up) {
      detach_owner(*up, *k);
      prune_markers(up, up_tuple, counters_);
    }
    t.erase(k);
  }
  remove_tuple(t);
}

void Chain::relink() {
  for (std::size_t i = 0; i < order_.size(); ++i) {
    order_[i]->prev_ = i > 0 ? order_[i - 1].get() : nullptr;
    order_[i]->next_ = i + 1 < order_.size() ? order_[i + 1].get() : nullptr;
  }
}

void Chain::rebuild_tree() {
  tree_.clear();
  tree_.reserve(order_.size());
  height_ = 0;
  if (!order_.empty()) build_subtree(0, order_.size() - 1, 1);
}

// Lower-middle split keeps the height at exactly floor(log2 m) + 1.
std::int32_t Chain::build_subtree(std::size_t lo, std::size_t hi, std::size_t depth) {
  const std::size_t mid = lo + (hi - lo) / 2;
  const auto index = static_cast<std::int32_t>(tree_.size());
  tree_.push_back({order_[mid].get(), -1, -1});
  height_ = std::max(height_, depth);
  if (mid > lo) tree_[static_cast<std::size_t>(index)].fail = build_subtree(lo, mid - 1, depth + 1);
  if (mid < hi) tree_[static_cast<std::size_t>(index)].succ = build_subtree(mid + 1, hi, depth + 1);
  return index;
}

std::vector<const Tuple*> Chain::in_order() const {
  std::vector<const Tuple*> out;
  std::vector<std::int32_t> stack;
  std::int32_t node = tree_.empty() ? -1 : 0;
  while (node >= 0 || !stack.empty()) {
    while (node >= 0) {
      stack.push_back(node);
      node = tree_[static_cast<std::size_t>(node)].fail;
    }
    node = stack.back();
    stack.pop_back();
    out.push_back(tree_[static_cast<std::size_t>(node)].tuple);
    node = tree_[static_cast<std::size_t>(node)].succ;
  }
  return out;
}

std::size_t Chain::entry_total() const {
  std::size_t n = 0;
  for (const auto& t : order_) n += t->entry_count();
  return n;
}

std::size_t Chain::owner_link_total() const {
  std::size_t n = 0;
  for (const auto& t : order_) t->for_each_entry([&](const Entry& e) { n += e.owners.size(); });
  return n;
}

std::size_t Chain::memory_bytes() const {
  std::size_t bytes = sizeof(Chain) + order_.capacity() * sizeof(void*) + tree_.capacity() * sizeof(SearchNode);
  for (const auto& t : order_) bytes += t->memory_bytes();
  return bytes;
}

AuditReport Chain::audit() const {
  const std::string where = "chain " + std::to_string(id_) + ": ";
  for (std::size_t i = 1; i < order_.size(); ++i)
    if (!mask_less_than(order_[i - 1]->mask(), order_[i]->mask()))
      return AuditReport::fail(where + "tuples " + std::to_string(i - 1) + "," + std::to_string(i) +
                               " are not strictly increasing");
  for (std::size_t i = 0; i < order_.size(); ++i) {
    const Tuple* expect_prev = i ? order_[i - 1].get() : nullptr;
    const Tuple* expect_next = i + 1 < order_.size() ? order_[i + 1].get() : nullptr;
    if (order_[i]->prev() != expect_prev || order_[i]->next() != expect_next)
      return AuditReport::fail(where + "prev/next links broken at tuple " + std::to_string(i));
  }

  auto walk = in_order();
  if (walk.size() != order_.size()) return AuditReport::fail(where + "search tree does not cover the chain");
  for (std::size_t i = 0; i < walk.size(); ++i)
    if (walk[i] != order_[i].get()) return AuditReport::fail(where + "search tree in-order differs from chain order");
  if (height_ != probe_bound()) return AuditReport::fail(where + "search tree is not balanced");

  std::size_t stored = 0, entries = 0, owner_links = 0;
  for (std::size_t i = 0; i < order_.size(); ++i) {
    const Tuple& t = *order_[i];
    const std::string at = where + "tuple " + std::to_string(i) + ": ";
    std::size_t rule_entries = 0, rules_here = 0;
    std::string bad;
    t.for_each_entry([&](const Entry& e) {
      if (!bad.empty()) return;
      if (!(apply_mask(e.key, t.mask()) == e.key)) bad = "entry key is not mask-canonical";
      for (const Rule* r : e.rules)
        if (!(r->mask == t.mask()) || !(r->fields == e.key)) bad = "rule " + std::to_string(r->id) + " misplaced";
      for (std::size_t j = 1; j < e.rules.size(); ++j)
        if (!outranks(*e.rules[j - 1], *e.rules[j])) bad = "rules at one key are not best-first";
      if (!e.rule() && e.owners.empty()) bad = "entry holds neither rule nor owners";
      if (const Tuple* p = t.prev()) {
        if (!e.marker) bad = "entry has no marker in the preceding tuple";
        else if (p->find(apply_mask(e.key, p->mask())) != e.marker) bad = "marker key law violated";
      } else if (e.marker) {
        bad = "head entry has a marker";
      }
      if (e.marker && (e.owner_slot >= e.marker->owners.size() || e.marker->owners[e.owner_slot] != &e))
        bad = "owner list of the marker does not contain the entry";
      for (std::size_t j = 0; j < e.owners.size(); ++j) {
        const Entry* o = e.owners[j];
        if (o->marker != &e || o->owner_slot != j) bad = "owner does not point back to its marker";
        else if (!t.next() || t.next()->find(o->key) != o) bad = "owner is not in the succeeding tuple";
      }
      if (e.hint != inherited_hint(e)) bad = "hint law violated";
      if (e.rule()) ++rule_entries;
      rules_here += e.rules.size();
      owner_links += e.owners.size();
    });
    if (!bad.empty()) return AuditReport::fail(at + bad);
    if (rule_entries != t.rule_count() || rules_here != t.stored_rules())
      return AuditReport::fail(at + "rule counters out of sync");
    stored += rules_here;
    entries += t.entry_count();
  }
  if (stored != rule_count_) return AuditReport::fail(where + "chain rule count out of sync");
  if (owner_links > entries) return AuditReport::fail(where + "more owner links than entries");
  if (entries > rule_count_ * order_.size()) return AuditReport::fail(where + "entry total exceeds n_c * m_c");
  return AuditReport::ok();
}

}  // namespace tuplechain
