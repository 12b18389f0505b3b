#pragma once

#include "tuplechain/field.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tuplechain {

/// DAG over tuples: an edge u -> v whenever mask u < mask v. Also usable for
/// arbitrary adjacency (masks left empty) when testing the cover solver.
struct TupleGraph {
  std::vector<Mask> masks;
  std::vector<std::vector<std::uint32_t>> successors;

  std::size_t vertex_count() const { return successors.size(); }
  std::size_t edge_count() const;
  bool has_edge(std::uint32_t u, std::uint32_t v) const;

  static TupleGraph from_edges(std::size_t vertex_count,
                               std::span<const std::pair<std::uint32_t, std::uint32_t>> edges);
};

/// Vertex-disjoint paths covering every vertex; each path runs from the
/// least to the most specific tuple.
struct PathCover {
  std::vector<std::vector<std::uint32_t>> chains;
  std::size_t chain_count() const { return chains.size(); }
};

/// Pairwise comparison of distinct masks. Throws std::invalid_argument on
/// duplicates.
TupleGraph build_graph(std::vector<Mask> masks);

/// Minimum path cover through maximum bipartite matching (Hopcroft-Karp on
/// the split out/in graph): chain count = V - |matching|. Throws
/// std::invalid_argument if the graph has a cycle.
PathCover min_path_cover(const TupleGraph& g);

/// Lookup-cost bound of a chain layout.
struct CoverQuality {
  std::size_t chains = 0;
  std::size_t tuples = 0;
  std::uint64_t probe_bound = 0;    // sum over chains of 1 + floor(log2 m_i)
  double balanced_bound = 0.0;      // l * (1 + log2(m / l))
  bool logarithmic_regime = false;  // l < m / 2
};

CoverQuality cover_quality(std::span<const std::size_t> chain_lengths);
CoverQuality cover_quality(const PathCover& cover);

/// l * (1 + log2(m / l)); zero when l == 0.
double balanced_probe_bound(std::size_t tuples, std::size_t chains);

/// Text edge list, one "u v" pair per line, preceded by a vertex count.
std::string dump_graph(const TupleGraph& g);

}  // namespace tuplechain
