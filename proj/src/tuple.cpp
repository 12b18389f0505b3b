#include "tuplechain/tuple.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace tuplechain {

Entry* Tuple::probe(const FieldVector& key) const {
  auto it = table_.find(detail::MaskedKey{key.words(), mask_.words()});
  return it == table_.end() ? nullptr : it->get();
}

Entry* Tuple::find(const FieldVector& canonical_key) const {
  auto it = table_.find(canonical_key);
  return it == table_.end() ? nullptr : it->get();
}

std::pair<Entry*, bool> Tuple::find_or_create(FieldVector canonical_key) {
  if (auto it = table_.find(canonical_key); it != table_.end()) return {it->get(), false};
  auto [it, inserted] = table_.insert(std::make_unique<Entry>(std::move(canonical_key)));
  return {it->get(), inserted};
}

void Tuple::erase(Entry* e) {
  if (e->rule() || !e->owners.empty() || e->marker)
    throw std::logic_error("erasing an entry that is still linked");
  auto it = table_.find(e->key);
  if (it == table_.end() || it->get() != e) throw std::logic_error("entry does not belong to this tuple");
  table_.erase(it);
}

bool Tuple::add_rule(Entry& e, const Rule& r) {
  const bool had_rule = !e.rules.empty();
  auto pos = std::find_if(e.rules.begin(), e.rules.end(), [&](const Rule* x) { return outranks(r, *x); });
  const bool front = pos == e.rules.begin();
  e.rules.insert(pos, &r);
  ++stored_rules_;
  if (!had_rule) ++rule_entries_;
  return front;
}

std::pair<bool, bool> Tuple::remove_rule(Entry& e, const Rule& r) {
  auto pos = std::find_if(e.rules.begin(), e.rules.end(), [&](const Rule* x) { return *x == r; });
  if (pos == e.rules.end()) return {false, false};
  const bool front = pos == e.rules.begin();
  e.rules.erase(pos);
  --stored_rules_;
  if (e.rules.empty()) --rule_entries_;
  return {true, front};
}

std::vector<Entry*> Tuple::entries() const {
  std::vector<Entry*> out;
  out.reserve(table_.size());
  for (const auto& e : table_) out.push_back(e.get());
  return out;
}

std::size_t Tuple::memory_bytes() const {
  // slot pointer plus one control byte per bucket
  std::size_t bytes = sizeof(Tuple) + mask_.bits().heap_bytes() + table_.capacity() * (sizeof(void*) + 1);
  for (const auto& e : table_) {
    bytes += sizeof(Entry) + e->key.heap_bytes() + e->owners.capacity() * sizeof(Entry*);
    if (e->rules.size() > 1) bytes += e->rules.capacity() * sizeof(const Rule*);
  }
  return bytes;
}

void attach_owner(Entry& marker, Entry& owner) {
  assert(owner.marker == nullptr);
  owner.marker = &marker;
  owner.owner_slot = static_cast<std::uint32_t>(marker.owners.size());
  marker.owners.push_back(&owner);
}

void detach_owner(Entry& marker, Entry& owner) {
  assert(owner.marker == &marker);
  auto& list = marker.owners;
  const auto slot = owner.owner_slot;
  assert(slot < list.size() && list[slot] == &owner);
  list[slot] = list.back();
  list[slot]->owner_slot = slot;
  list.pop_back();
  if (list.empty()) list.shrink_to_fit();
  owner.marker = nullptr;
}

Entry* leave_marker(Entry& e, Tuple* target, MaintenanceCounters& counters) {
  if (!target) return nullptr;
  absl::InlinedVector<Entry*, 8> created;
  Entry* child = &e;
  Entry* first = nullptr;
  for (Tuple* t = target; t; t = t->prev()) {
    ++counters.marker_touches;
    auto [k, fresh] = t->find_or_create(apply_mask(child->key, t->mask()));
    attach_owner(*k, *child);
    if (!first) first = k;
    if (!fresh) break;
    created.push_back(k);
    child = k;
  }
  // Fresh markers hold no rule, so each inherits the hint of its own marker,
  // settled from the head side first.
  for (auto it = created.rbegin(); it != created.rend(); ++it) {
    Entry* k = *it;
    k->hint = k->marker ? k->marker->hint : nullptr;
  }
  return first;
}

Entry* obtain_marker(const Entry& e, const Tuple* target) {
  if (!target) return nullptr;
  return e.marker;
}

void report_hint(Entry& e, MaintenanceCounters& counters) {
  absl::InlinedVector<Entry*, 16> stack{&e};
  while (!stack.empty()) {
    Entry* cur = stack.back();
    stack.pop_back();
    for (Entry* o : cur->owners) {
      ++counters.hint_touches;
      const Rule* h = better(o->rule(), cur->hint);
      if (h != o->hint) {
        o->hint = h;
        stack.push_back(o);
      }
    }
  }
}

void delete_marker(Entry& e, Tuple* target, MaintenanceCounters& counters) {
  Entry* k = e.marker;
  if (!k || !target) return;
  detach_owner(*k, e);
  prune_markers(k, target, counters);
}

void prune_markers(Entry* k, Tuple* t, MaintenanceCounters& counters) {
  while (k && t && !k->rule() && k->owners.empty()) {
    ++counters.marker_touches;
    Entry* up = k->marker;
    if (up) detach_owner(*up, *k);
    t->erase(k);
    k = up;
    t = t->prev();
  }
}

}  // namespace tuplechain
