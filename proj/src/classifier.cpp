#include "tuplechain/classifier.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace tuplechain {

TupleChainClassifier::TupleChainClassifier(FieldSchema schema)
    : schema_(std::make_shared<const FieldSchema>(std::move(schema))) {}

TupleChainClassifier::TupleChainClassifier(std::shared_ptr<const FieldSchema> schema) : schema_(std::move(schema)) {
  if (!schema_) throw std::invalid_argument("classifier needs a field schema");
}

TupleChainClassifier TupleChainClassifier::build(std::shared_ptr<const FieldSchema> schema,
                                                 std::span<const Rule> rules) {
  TupleChainClassifier c(std::move(schema));
  c.rules_.reserve(rules.size());
  absl::flat_hash_map<Mask, std::vector<const Rule*>> by_mask;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const Rule& r = rules[i];
    try {
      validate_rule(*c.schema_, r);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("rule at index " + std::to_string(i) + ": " + e.what());
    }
    auto [it, fresh] = c.rules_.try_emplace(r.id, r);
    if (!fresh)
      throw std::invalid_argument("rule at index " + std::to_string(i) + ": duplicate rule id " +
                                  std::to_string(r.id));
    by_mask[r.mask].push_back(&it->second);
  }

  std::vector<Mask> masks;
  masks.reserve(by_mask.size());
  for (const auto& [m, _] : by_mask) masks.push_back(m);
  std::sort(masks.begin(), masks.end(), MaskOrder{});
  const TupleGraph graph = build_graph(masks);
  const PathCover cover = min_path_cover(graph);

  for (const auto& path : cover.chains) {
    Chain& chain = c.open_chain();
    for (auto v : path) {
      Tuple& t = chain.insert_tuple(std::make_unique<Tuple>(graph.masks[v]), chain.tuple_count());
      c.registry_.emplace(graph.masks[v], Placement{&chain, &t});
    }
    // Head to tail: a tuple's rules are in place before any successor leaves
    // markers on it, so hint reports start from settled entries.
    for (auto v : path) {
      Tuple& t = *c.registry_.at(graph.masks[v]).tuple;
      for (const Rule* r : by_mask.at(graph.masks[v])) chain.insert_rule(t, *r);
    }
  }
  c.refresh_bound();
  return c;
}

MatchResult TupleChainClassifier::lookup(const FieldVector& key) const {
  MatchResult best;
  for (const auto& chain : chains_) best.merge(chain->lookup(key));
  return best;
}

void TupleChainClassifier::insert(const Rule& r) {
  validate_rule(*schema_, r);
  if (rules_.contains(r.id)) throw std::invalid_argument("duplicate rule id " + std::to_string(r.id));
  auto placement = registry_.contains(r.mask) ? registry_.at(r.mask) : place_tuple(r.mask);
  const Rule& stored = rules_.try_emplace(r.id, r).first->second;
  placement.chain->insert_rule(*placement.tuple, stored);
}

bool TupleChainClassifier::remove(const Rule& r) {
  auto it = rules_.find(r.id);
  if (it == rules_.end() || !(it->second == r)) return false;
  auto reg = registry_.find(r.mask);
  if (reg == registry_.end()) throw std::logic_error("stored rule has no registered tuple");
  auto [chain, tuple] = reg->second;
  if (!chain->delete_rule(*tuple, it->second)) throw std::logic_error("stored rule missing from its tuple");
  rules_.erase(it);
  if (tuple->stored_rules() == 0) {
    registry_.erase(reg);
    chain->retire_tuple(*tuple);
    if (chain->empty()) drop_chain(*chain);
    refresh_bound();
  }
  return true;
}

std::optional<std::uint64_t> TupleChainClassifier::choose_chain(const Mask& m) const {
  const Chain* pick = nullptr;
  for (const auto& c : chains_) {
    if (!c->can_host(m)) continue;
    if (!pick || std::tuple(c->tuple_count(), c->rule_count(), c->id()) <
                     std::tuple(pick->tuple_count(), pick->rule_count(), pick->id()))
      pick = c.get();
  }
  if (!pick) return std::nullopt;
  return pick->id();
}

TupleChainClassifier::Placement TupleChainClassifier::place_tuple(const Mask& m) {
  Chain* chain = nullptr;
  if (auto id = choose_chain(m)) {
    for (const auto& c : chains_)
      if (c->id() == *id) chain = c.get();
  } else {
    chain = &open_chain();
  }
  const auto pos = chain->can_host(m);
  Tuple& t = chain->insert_tuple(std::make_unique<Tuple>(m), *pos);
  Placement p{chain, &t};
  registry_.emplace(m, p);
  refresh_bound();
  return p;
}

void TupleChainClassifier::rebuild() {
  auto current = rules();
  *this = build(schema_, current);
}

Chain& TupleChainClassifier::open_chain() {
  chains_.push_back(std::make_unique<Chain>(next_chain_id_++));
  return *chains_.back();
}

void TupleChainClassifier::drop_chain(const Chain& c) {
  std::erase_if(chains_, [&](const auto& p) { return p.get() == &c; });
}

void TupleChainClassifier::refresh_bound() {
  probe_bound_ = 0;
  for (const auto& c : chains_) probe_bound_ += c->probe_bound();
}

const Rule* TupleChainClassifier::find_rule(RuleId id) const {
  auto it = rules_.find(id);
  return it == rules_.end() ? nullptr : &it->second;
}

std::vector<Rule> TupleChainClassifier::rules() const {
  std::vector<Rule> out;
  out.reserve(rules_.size());
  for (const auto& [_, r] : rules_) out.push_back(r);
  std::sort(out.begin(), out.end(), [](const Rule& a, const Rule& b) { return a.id < b.id; });
  return out;
}

const Chain* TupleChainClassifier::chain_of(const Mask& m) const {
  auto it = registry_.find(m);
  return it == registry_.end() ? nullptr : it->second.chain;
}

Tuple* TupleChainClassifier::tuple_of(const Mask& m) const {
  auto it = registry_.find(m);
  return it == registry_.end() ? nullptr : it->second.tuple;
}

StructureStats TupleChainClassifier::stats() const {
  StructureStats s;
  s.rule_count = rules_.size();
  s.chain_count = chains_.size();
  for (const auto& c : chains_) {
    s.tuple_count += c->tuple_count();
    s.max_chain_rules = std::max(s.max_chain_rules, c->rule_count());
    s.max_chain_tuples = std::max(s.max_chain_tuples, c->tuple_count());
    s.chain_tuple_counts.push_back(c->tuple_count());
    s.entry_total += c->entry_total();
    s.owner_link_total += c->owner_link_total();
  }
  s.memory_bytes = memory_bytes();
  s.bounds = cover_quality(s.chain_tuple_counts);
  return s;
}

AuditReport TupleChainClassifier::audit() const {
  std::size_t tuples = 0, stored = 0;
  for (const auto& c : chains_) {
    if (auto r = c->audit(); !r) return r;
    if (c->empty()) return AuditReport::fail("chain " + std::to_string(c->id()) + " is empty");
    for (std::size_t i = 0; i < c->tuple_count(); ++i) {
      const Tuple& t = c->tuple(i);
      auto reg = registry_.find(t.mask());
      if (reg == registry_.end() || reg->second.tuple != &t || reg->second.chain != c.get())
        return AuditReport::fail("tuple registry out of sync for chain " + std::to_string(c->id()));
      if (t.stored_rules() == 0)
        return AuditReport::fail("chain " + std::to_string(c->id()) + " keeps a tuple without rules");
    }
    tuples += c->tuple_count();
    stored += c->rule_count();
  }
  if (tuples != registry_.size()) return AuditReport::fail("registry holds tuples missing from every chain");
  if (stored != rules_.size()) return AuditReport::fail("rule store and chains disagree on the rule count");
  for (const auto& [id, r] : rules_) {
    const Tuple* t = tuple_of(r.mask);
    const Entry* e = t ? t->find(r.fields) : nullptr;
    if (!e || std::find(e->rules.begin(), e->rules.end(), &r) == e->rules.end())
      return AuditReport::fail("rule " + std::to_string(id) + " is not stored in its tuple");
  }
  std::uint64_t bound = 0;
  for (const auto& c : chains_) bound += c->probe_bound();
  if (bound != probe_bound_) return AuditReport::fail("cached probe bound is stale");
  return AuditReport::ok();
}

std::size_t TupleChainClassifier::memory_bytes() const {
  std::size_t bytes = sizeof(*this);
  bytes += rules_.bucket_count() * (sizeof(void*) + 1);
  for (const auto& [_, r] : rules_)
    bytes += sizeof(std::pair<const RuleId, Rule>) + r.fields.heap_bytes() + r.mask.bits().heap_bytes();
  bytes += registry_.capacity() * (sizeof(std::pair<const Mask, Placement>) + 1);
  for (const auto& [m, _] : registry_) bytes += m.bits().heap_bytes();
  bytes += chains_.capacity() * sizeof(void*);
  for (const auto& c : chains_) bytes += c->memory_bytes();
  return bytes;
}

MaintenanceCounters TupleChainClassifier::counters() const {
  MaintenanceCounters total;
  for (const auto& c : chains_) total += c->counters();
  return total;
}

void TupleChainClassifier::reset_counters() {
  for (auto& c : chains_) c->reset_counters();
}

}  // namespace tuplechain
