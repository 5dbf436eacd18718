#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netprice/numerics.hpp"

namespace netprice {

enum class GraphSource { ER, EdgeList, Manual };

/// Symmetric, zero-diagonal, nonnegative tie-weight matrix G.
struct SocialGraph {
  Eigen::Index n = 0;
  Matrix ties;
  GraphSource source = GraphSource::Manual;
  std::optional<double> p_e;
  std::optional<std::uint64_t> seed;
  // Number of normal weight draws that came out negative and were set to 0.
  int clamped_weights = 0;
};

/// Unweighted undirected graph as read from a dataset.
struct GraphSkeleton {
  Eigen::Index n = 0;
  // Unordered pairs stored as (lo, hi) with lo < hi, sorted ascending.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
  // Original dataset identifier of each dense vertex.
  std::vector<std::uint64_t> vertex_labels;
  int self_loops_ignored = 0;
};

struct GraphStats {
  std::int64_t tie_count = 0;
  double edge_probability = 0.0;
};

SocialGraph generate_er(Eigen::Index n, double p_e, double mu_g, std::uint64_t seed);

/// Parse a whitespace-separated edge list ('#' lines are comments). Vertices
/// are relabeled densely in order of first appearance.
GraphSkeleton load_edge_list(std::istream& in);
GraphSkeleton load_edge_list_file(const std::string& path);

/// Write the skeleton using its original vertex labels, one edge per line.
void write_edge_list(const GraphSkeleton& skeleton, std::ostream& out);

/// Induced subgraph on n vertices drawn uniformly without replacement.
/// Chosen vertices keep ascending order of their skeleton index.
GraphSkeleton sample_subgraph(const GraphSkeleton& skeleton, Eigen::Index n, std::uint64_t seed);

/// Normal(mu_g, 1) weight per skeleton edge, clamped below at 0.
SocialGraph assign_ties(const GraphSkeleton& skeleton, double mu_g, std::uint64_t seed);

/// Wrap an explicit weight matrix, checking symmetry, zero diagonal and sign.
SocialGraph manual_graph(const Matrix& ties);

/// Read a comma/whitespace separated square weight matrix.
SocialGraph load_manual_graph_file(const std::string& path);

GraphStats graph_stats(const SocialGraph& graph);
GraphStats graph_stats(const GraphSkeleton& skeleton);

/// True when the matrix satisfies every SocialGraph invariant exactly.
bool satisfies_graph_invariants(const Matrix& ties);

}  // namespace netprice
