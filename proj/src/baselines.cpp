#include "tuplechain/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace tuplechain {

MatchResult linear_lookup(std::span<const Rule> rules, const FieldVector& key) {
  const Rule* best = nullptr;
  for (const Rule& r : rules)
    if (matches(key, r)) best = better(best, &r);
  return MatchResult::of(best, rules.size());
}

LinearClassifier LinearClassifier::build(FieldSchema schema, std::span<const Rule> rules) {
  LinearClassifier c(std::move(schema));
  c.rules_.reserve(rules.size());
  for (const auto& r : rules) c.insert(r);
  return c;
}

void LinearClassifier::insert(const Rule& r) {
  validate_rule(schema_, r);
  if (!index_.try_emplace(r.id, rules_.size()).second)
    throw std::invalid_argument("duplicate rule id " + std::to_string(r.id));
  rules_.push_back(r);
}

bool LinearClassifier::remove(const Rule& r) {
  auto it = index_.find(r.id);
  if (it == index_.end() || !(rules_[it->second] == r)) return false;
  const std::size_t slot = it->second;
  index_.erase(it);
  if (slot + 1 != rules_.size()) {
    rules_[slot] = std::move(rules_.back());
    index_[rules_[slot].id] = slot;
  }
  rules_.pop_back();
  return true;
}

std::size_t LinearClassifier::memory_bytes() const {
  std::size_t bytes = sizeof(*this) + rules_.capacity() * sizeof(Rule) +
                      index_.capacity() * (sizeof(std::pair<const RuleId, std::size_t>) + 1);
  for (const auto& r : rules_) bytes += r.fields.heap_bytes() + r.mask.bits().heap_bytes();
  return bytes;
}

TssClassifier TssClassifier::build(FieldSchema schema, std::span<const Rule> rules) {
  TssClassifier c(std::move(schema));
  for (const auto& r : rules) c.insert(r);
  return c;
}

MatchResult TssClassifier::lookup(const FieldVector& key) const {
  const Rule* best = nullptr;
  for (const auto& t : tables_) {
    auto it = t->entries.find(detail::MaskedKey{key.words(), t->mask.words()});
    if (it != t->entries.end()) best = better(best, &it->second.front());
  }
  return MatchResult::of(best, tables_.size());
}

void TssClassifier::insert(const Rule& r) {
  validate_rule(schema_, r);
  if (ids_.contains(r.id)) throw std::invalid_argument("duplicate rule id " + std::to_string(r.id));
  auto pos = std::lower_bound(tables_.begin(), tables_.end(), r.mask,
                              [](const auto& t, const Mask& m) { return MaskOrder{}(t->mask, m); });
  if (pos == tables_.end() || !((*pos)->mask == r.mask)) {
    auto t = std::make_unique<Table>();
    t->mask = r.mask;
    pos = tables_.insert(pos, std::move(t));
  }
  auto& slot = (*pos)->entries[r.fields];
  slot.insert(std::find_if(slot.begin(), slot.end(), [&](const Rule& x) { return outranks(r, x); }), r);
  ++(*pos)->rule_count;
  ids_.insert(r.id);
}

bool TssClassifier::remove(const Rule& r) {
  if (!ids_.contains(r.id)) return false;
  auto pos = std::lower_bound(tables_.begin(), tables_.end(), r.mask,
                              [](const auto& t, const Mask& m) { return MaskOrder{}(t->mask, m); });
  if (pos == tables_.end() || !((*pos)->mask == r.mask)) return false;
  Table& t = **pos;
  auto it = t.entries.find(r.fields);
  if (it == t.entries.end()) return false;
  auto& slot = it->second;
  auto hit = std::find(slot.begin(), slot.end(), r);
  if (hit == slot.end()) return false;
  slot.erase(hit);
  if (slot.empty()) t.entries.erase(it);
  ids_.erase(r.id);
  if (--t.rule_count == 0) tables_.erase(pos);
  return true;
}

std::size_t TssClassifier::memory_bytes() const {
  std::size_t bytes = sizeof(*this) + tables_.capacity() * sizeof(void*) + ids_.capacity() * (sizeof(RuleId) + 1);
  for (const auto& t : tables_) {
    bytes += sizeof(Table) +
             t->entries.capacity() * (sizeof(std::pair<const FieldVector, absl::InlinedVector<Rule, 1>>) + 1);
    for (const auto& [k, rules] : t->entries) {
      bytes += k.heap_bytes();
      if (rules.size() > 1) bytes += rules.capacity() * sizeof(Rule);
    }
  }
  return bytes;
}

}  // namespace tuplechain
