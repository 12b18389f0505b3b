#include "tuplechain/etc_classifier.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace tuplechain {

namespace {

struct MergeCandidate {
  std::uint32_t edges;
  unsigned popcount;
  std::uint32_t a, b;
  std::uint32_t version_a, version_b;
};

// Orders the heap so the top is the most connected pair, then the one with
// the widest merged head, then the lowest indices.
struct WorseCandidate {
  bool operator()(const MergeCandidate& x, const MergeCandidate& y) const {
    if (x.edges != y.edges) return x.edges < y.edges;
    if (x.popcount != y.popcount) return x.popcount < y.popcount;
    if (x.a != y.a) return x.a > y.a;
    return x.b > y.b;
  }
};

}  // namespace

std::vector<GroupPlan> group_chains(const TupleGraph& graph, const PathCover& cover, unsigned min_head_bits) {
  const std::size_t n = cover.chains.size();
  std::vector<GroupPlan> plans(n);
  std::vector<std::uint32_t> group_of(graph.vertex_count());
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto& path = cover.chains[i];
    plans[i].vertices = path;
    plans[i].chains = 1;
    plans[i].head_mask = graph.masks.at(path.front());
    for (auto v : path) {
      plans[i].head_mask = intersect(plans[i].head_mask, graph.masks[v]);
      group_of[v] = i;
    }
  }

  std::vector<absl::flat_hash_map<std::uint32_t, std::uint32_t>> cross(n);
  for (std::uint32_t u = 0; u < graph.vertex_count(); ++u)
    for (auto v : graph.successors[u]) {
      const auto a = group_of[u], b = group_of[v];
      if (a == b) continue;
      ++cross[a][b];
      ++cross[b][a];
    }

  std::vector<bool> alive(n, true);
  std::vector<std::uint32_t> version(n, 0);
  std::priority_queue<MergeCandidate, std::vector<MergeCandidate>, WorseCandidate> heap;
  auto offer = [&](std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    const unsigned pop = intersect(plans[a].head_mask, plans[b].head_mask).popcount();
    if (pop < min_head_bits) return;
    heap.push({cross[a].at(b), pop, a, b, version[a], version[b]});
  };
  for (std::uint32_t a = 0; a < n; ++a)
    for (const auto& [b, _] : cross[a])
      if (a < b) offer(a, b);

  while (!heap.empty()) {
    const auto c = heap.top();
    heap.pop();
    if (!alive[c.a] || !alive[c.b] || version[c.a] != c.version_a || version[c.b] != c.version_b) continue;
    const auto a = c.a, b = c.b;
    auto& keep = plans[a];
    keep.head_mask = intersect(keep.head_mask, plans[b].head_mask);
    keep.vertices.insert(keep.vertices.end(), plans[b].vertices.begin(), plans[b].vertices.end());
    keep.chains += plans[b].chains;
    alive[b] = false;
    ++version[a];
    for (const auto& [x, count] : cross[b]) {
      cross[x].erase(b);
      if (x == a) continue;
      cross[a][x] += count;
      cross[x][a] += count;
    }
    cross[b].clear();
    cross[a].erase(b);
    for (const auto& [x, _] : cross[a])
      if (alive[x]) offer(a, x);
  }

  std::vector<GroupPlan> out;
  for (std::uint32_t i = 0; i < n; ++i)
    if (alive[i]) out.push_back(std::move(plans[i]));
  return out;
}

EtcClassifier::EtcClassifier(FieldSchema schema, EtcOptions options)
    : schema_(std::make_shared<const FieldSchema>(std::move(schema))), options_(options) {}

EtcClassifier EtcClassifier::build(FieldSchema schema, std::span<const Rule> rules, EtcOptions options) {
  EtcClassifier etc(std::move(schema), options);
  absl::flat_hash_map<Mask, std::vector<const Rule*>> by_mask;
  etc.ids_.reserve(rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const Rule& r = rules[i];
    try {
      validate_rule(*etc.schema_, r);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("rule at index " + std::to_string(i) + ": " + e.what());
    }
    if (!etc.ids_.insert(r.id).second)
      throw std::invalid_argument("rule at index " + std::to_string(i) + ": duplicate rule id " +
                                  std::to_string(r.id));
    by_mask[r.mask].push_back(&r);
  }

  std::vector<Mask> masks;
  for (const auto& [m, _] : by_mask) masks.push_back(m);
  std::sort(masks.begin(), masks.end(), MaskOrder{});
  const TupleGraph graph = build_graph(masks);
  const PathCover cover = min_path_cover(graph);

  for (auto& plan : group_chains(graph, cover, options.min_head_bits)) {
    auto& g = *etc.groups_.emplace_back(std::make_unique<Group>());
    g.head_mask = plan.head_mask;
    std::sort(plan.vertices.begin(), plan.vertices.end());
    absl::flat_hash_map<FieldVector, std::vector<Rule>> buckets;
    for (auto v : plan.vertices) {
      const Mask& m = graph.masks[v];
      const auto& members = by_mask.at(m);
      g.member_masks[m] = members.size();
      g.rule_count += members.size();
      etc.mask_to_group_[m] = &g;
      for (const Rule* r : members) buckets[apply_mask(r->fields, g.head_mask)].push_back(*r);
    }
    g.heads.reserve(buckets.size());
    for (auto& [key, bucket] : buckets)
      g.heads.emplace(key, std::make_unique<TupleChainClassifier>(TupleChainClassifier::build(etc.schema_, bucket)));
  }
  return etc;
}

std::pair<MatchResult, std::uint64_t> EtcClassifier::lookup_bounded(const FieldVector& key) const {
  MatchResult best;
  std::uint64_t bound = 0;
  for (const auto& g : groups_) {
    ++best.probes;
    ++bound;
    auto it = g->heads.find(detail::MaskedKey{key.words(), g->head_mask.words()});
    if (it == g->heads.end()) continue;
    bound += it->second->probe_bound();
    best.merge(it->second->lookup(key));
  }
  return {best, bound};
}

MatchResult EtcClassifier::lookup(const FieldVector& key) const { return lookup_bounded(key).first; }

EtcClassifier::Group& EtcClassifier::route(const Mask& m) {
  if (auto it = mask_to_group_.find(m); it != mask_to_group_.end()) return *it->second;
  Group* pick = nullptr;
  unsigned best_bits = 0;
  for (const auto& g : groups_) {
    if (!mask_subset(g->head_mask, m)) continue;
    const unsigned bits = g->head_mask.popcount();
    if (!pick || bits > best_bits) {
      pick = g.get();
      best_bits = bits;
    }
  }
  if (!pick) {
    pick = groups_.emplace_back(std::make_unique<Group>()).get();
    pick->head_mask = m;
  }
  return *pick;
}

void EtcClassifier::insert(const Rule& r) {
  validate_rule(*schema_, r);
  if (ids_.contains(r.id)) throw std::invalid_argument("duplicate rule id " + std::to_string(r.id));
  Group& g = route(r.mask);
  auto key = apply_mask(r.fields, g.head_mask);
  auto it = g.heads.find(key);
  if (it == g.heads.end()) it = g.heads.emplace(std::move(key), std::make_unique<TupleChainClassifier>(schema_)).first;
  it->second->insert(r);
  ++g.member_masks[r.mask];
  ++g.rule_count;
  mask_to_group_[r.mask] = &g;
  ids_.insert(r.id);
}

bool EtcClassifier::remove(const Rule& r) {
  if (!ids_.contains(r.id)) return false;
  auto mg = mask_to_group_.find(r.mask);
  if (mg == mask_to_group_.end()) return false;
  Group& g = *mg->second;
  auto head = g.heads.find(apply_mask(r.fields, g.head_mask));
  if (head == g.heads.end() || !head->second->remove(r)) return false;
  if (head->second->empty()) g.heads.erase(head);
  if (--g.member_masks.at(r.mask) == 0) {
    g.member_masks.erase(r.mask);
    mask_to_group_.erase(mg);
  }
  --g.rule_count;
  ids_.erase(r.id);
  if (g.heads.empty()) std::erase_if(groups_, [&](const auto& p) { return p.get() == &g; });
  return true;
}

EtcStats EtcClassifier::stats() const {
  EtcStats s;
  s.rule_count = ids_.size();
  s.group_count = groups_.size();
  for (const auto& g : groups_) {
    s.head_entry_count += g->heads.size();
    for (const auto& [_, local] : g->heads) {
      s.local_tuple_total += local->tuple_count();
      s.local_chain_total += local->chain_count();
      s.max_local_rules = std::max(s.max_local_rules, local->rule_count());
    }
  }
  s.memory_bytes = memory_bytes();
  return s;
}

AuditReport EtcClassifier::audit() const {
  std::size_t rules = 0, masks = 0;
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const Group& g = *groups_[gi];
    const std::string where = "group " + std::to_string(gi) + ": ";
    if (g.heads.empty()) return AuditReport::fail(where + "has no head entries");
    // Deleting members can leave the head narrower than the AND of the
    // remaining masks; containment is what filtering relies on.
    std::size_t routed = 0;
    for (const auto& [m, count] : g.member_masks) {
      if (!mask_subset(g.head_mask, m)) return AuditReport::fail(where + "head mask not contained in a member mask");
      auto it = mask_to_group_.find(m);
      if (it == mask_to_group_.end() || it->second != &g) return AuditReport::fail(where + "mask routing out of sync");
      routed += count;
    }
    masks += g.member_masks.size();
    std::size_t local_rules = 0;
    for (const auto& [key, local] : g.heads) {
      if (!(apply_mask(key, g.head_mask) == key)) return AuditReport::fail(where + "head key not mask-canonical");
      if (local->empty()) return AuditReport::fail(where + "empty local classifier kept");
      if (auto r = local->audit(); !r) return AuditReport::fail(where + r.violation);
      for (const auto& r : local->rules()) {
        if (!(apply_mask(r.fields, g.head_mask) == key))
          return AuditReport::fail(where + "rule " + std::to_string(r.id) + " sits under the wrong head entry");
        if (!g.member_masks.contains(r.mask))
          return AuditReport::fail(where + "rule " + std::to_string(r.id) + " has an unrouted mask");
      }
      local_rules += local->rule_count();
    }
    if (local_rules != g.rule_count || routed != g.rule_count)
      return AuditReport::fail(where + "rule counters out of sync");
    rules += g.rule_count;
  }
  if (rules != ids_.size()) return AuditReport::fail("rule id set and groups disagree");
  if (masks != mask_to_group_.size()) return AuditReport::fail("mask routing table has stale masks");
  return AuditReport::ok();
}

std::size_t EtcClassifier::memory_bytes() const {
  std::size_t bytes = sizeof(*this) + ids_.capacity() * (sizeof(RuleId) + 1) +
                      mask_to_group_.capacity() * (sizeof(std::pair<const Mask, Group*>) + 1) +
                      groups_.capacity() * sizeof(void*);
  for (const auto& g : groups_) {
    bytes += sizeof(Group) + g->heads.capacity() * (sizeof(std::pair<const FieldVector, void*>) + 1) +
             g->member_masks.capacity() * (sizeof(std::pair<const Mask, std::size_t>) + 1);
    for (const auto& [key, local] : g->heads) bytes += key.heap_bytes() + local->memory_bytes();
  }
  return bytes;
}

}  // namespace tuplechain
