#include "tuplechain/path_cover.hpp"

#include "tuplechain/chain.hpp"
#include "tuplechain/rule.hpp"

#include <absl/container/flat_hash_set.h>

#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace tuplechain {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

bool is_acyclic(const TupleGraph& g) {
  std::vector<std::uint32_t> indegree(g.vertex_count(), 0);
  for (const auto& succ : g.successors)
    for (auto v : succ) ++indegree[v];
  std::vector<std::uint32_t> ready;
  for (std::uint32_t v = 0; v < indegree.size(); ++v)
    if (indegree[v] == 0) ready.push_back(v);
  std::size_t seen = 0;
  while (!ready.empty()) {
    auto u = ready.back();
    ready.pop_back();
    ++seen;
    for (auto v : g.successors[u])
      if (--indegree[v] == 0) ready.push_back(v);
  }
  return seen == g.vertex_count();
}

// Hopcroft-Karp over left = edge tails, right = edge heads.
class Matcher {
 public:
  explicit Matcher(const TupleGraph& g)
      : g_(g), n_(g.vertex_count()), match_out_(n_, kNone), match_in_(n_, kNone), dist_(n_) {}

  void run() {
    while (bfs())
      for (std::uint32_t u = 0; u < n_; ++u)
        if (match_out_[u] == kNone) dfs(u);
  }

  const std::vector<std::uint32_t>& match_out() const { return match_out_; }
  const std::vector<std::uint32_t>& match_in() const { return match_in_; }

 private:
  bool bfs() {
    std::queue<std::uint32_t> q;
    bool found = false;
    for (std::uint32_t u = 0; u < n_; ++u) {
      if (match_out_[u] == kNone) {
        dist_[u] = 0;
        q.push(u);
      } else {
        dist_[u] = kNone;
      }
    }
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto v : g_.successors[u]) {
        auto w = match_in_[v];
        if (w == kNone) {
          found = true;
        } else if (dist_[w] == kNone) {
          dist_[w] = dist_[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  }

  bool dfs(std::uint32_t u) {
    for (auto v : g_.successors[u]) {
      auto w = match_in_[v];
      if (w == kNone || (dist_[w] == dist_[u] + 1 && dfs(w))) {
        match_out_[u] = v;
        match_in_[v] = u;
        return true;
      }
    }
    dist_[u] = kNone;
    return false;
  }

  const TupleGraph& g_;
  std::size_t n_;
  std::vector<std::uint32_t> match_out_, match_in_, dist_;
};

}  // namespace

std::size_t TupleGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& s : successors) n += s.size();
  return n;
}

bool TupleGraph::has_edge(std::uint32_t u, std::uint32_t v) const {
  for (auto x : successors.at(u))
    if (x == v) return true;
  return false;
}

TupleGraph TupleGraph::from_edges(std::size_t vertex_count,
                                  std::span<const std::pair<std::uint32_t, std::uint32_t>> edges) {
  TupleGraph g;
  g.successors.resize(vertex_count);
  for (auto [u, v] : edges) {
    if (u >= vertex_count || v >= vertex_count) throw std::invalid_argument("edge endpoint out of range");
    g.successors[u].push_back(v);
  }
  return g;
}

TupleGraph build_graph(std::vector<Mask> masks) {
  absl::flat_hash_set<Mask> seen;
  for (const auto& m : masks)
    if (!seen.insert(m).second) throw std::invalid_argument("duplicate mask in tuple graph");
  TupleGraph g;
  g.successors.resize(masks.size());
  std::vector<unsigned> pop(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) pop[i] = masks[i].popcount();
  for (std::uint32_t u = 0; u < masks.size(); ++u)
    for (std::uint32_t v = 0; v < masks.size(); ++v)
      if (pop[u] < pop[v] && mask_subset(masks[u], masks[v])) g.successors[u].push_back(v);
  g.masks = std::move(masks);
  return g;
}

PathCover min_path_cover(const TupleGraph& g) {
  if (!is_acyclic(g)) throw std::invalid_argument("tuple graph has a cycle");
  Matcher m(g);
  m.run();
  PathCover cover;
  const auto& next = m.match_out();
  const auto& prev = m.match_in();
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
    if (prev[v] != kNone) continue;
    auto& path = cover.chains.emplace_back();
    for (auto u = v; u != kNone; u = next[u]) path.push_back(u);
  }
  return cover;
}

double balanced_probe_bound(std::size_t tuples, std::size_t chains) {
  if (chains == 0) return 0.0;
  const double l = static_cast<double>(chains);
  return l * (1.0 + std::log2(static_cast<double>(tuples) / l));
}

CoverQuality cover_quality(std::span<const std::size_t> chain_lengths) {
  CoverQuality q;
  q.chains = chain_lengths.size();
  for (auto len : chain_lengths) {
    q.tuples += len;
    if (len) q.probe_bound += 1 + floor_log2(len);
  }
  q.balanced_bound = balanced_probe_bound(q.tuples, q.chains);
  q.logarithmic_regime = 2 * q.chains < q.tuples;
  return q;
}

CoverQuality cover_quality(const PathCover& cover) {
  std::vector<std::size_t> lengths;
  lengths.reserve(cover.chains.size());
  for (const auto& c : cover.chains) lengths.push_back(c.size());
  return cover_quality(lengths);
}

std::string dump_graph(const TupleGraph& g) {
  std::ostringstream os;
  os << g.vertex_count() << '\n';
  for (std::uint32_t u = 0; u < g.vertex_count(); ++u)
    for (auto v : g.successors[u]) os << u << ' ' << v << '\n';
  return os.str();
}

}  // namespace tuplechain
