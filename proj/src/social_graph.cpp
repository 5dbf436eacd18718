#include "netprice/social_graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "netprice/rng.hpp"

namespace netprice {

namespace {

double clamped_normal(CounterRng& rng, double mean, int& clamped) {
  const double w = rng.normal(mean, 1.0);
  if (w < 0.0) {
    ++clamped;
    return 0.0;
  }
  return w;
}

bool parse_u64(std::string_view token, std::uint64_t& out) {
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

SocialGraph generate_er(Eigen::Index n, double p_e, double mu_g, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "graph needs at least one user");
  if (!(p_e >= 0.0 && p_e <= 1.0)) {
    throw Error(ErrorCode::InvalidProbability, "edge probability must lie in [0, 1]");
  }
  SocialGraph g;
  g.n = n;
  g.ties = Matrix::Zero(n, n);
  g.source = GraphSource::ER;
  g.p_e = p_e;
  g.seed = seed;

  CounterRng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (rng.uniform() < p_e) {
        const double w = clamped_normal(rng, mu_g, g.clamped_weights);
        g.ties(i, j) = w;
        g.ties(j, i) = w;
      }
    }
  }
  return g;
}

GraphSkeleton load_edge_list(std::istream& in) {
  GraphSkeleton sk;
  std::unordered_map<std::uint64_t, Eigen::Index> dense;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;

  auto label_of = [&](std::uint64_t raw) {
    auto [it, inserted] = dense.try_emplace(raw, static_cast<Eigen::Index>(sk.vertex_labels.size()));
    if (inserted) sk.vertex_labels.push_back(raw);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    std::string tok_u, tok_v, extra;
    std::uint64_t u = 0, v = 0;
    if (!(fields >> tok_u >> tok_v) || (fields >> extra) || !parse_u64(tok_u, u) ||
        !parse_u64(tok_v, v)) {
      throw Error(ErrorCode::ParseError,
                  "malformed edge at line " + std::to_string(line_no) + ": '" + line + "'");
    }
    if (u == v) {
      ++sk.self_loops_ignored;
      continue;
    }
    const Eigen::Index a = label_of(u);
    const Eigen::Index b = label_of(v);
    edges.emplace_back(std::min(a, b), std::max(a, b));
  }

  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  sk.edges = std::move(edges);
  sk.n = static_cast<Eigen::Index>(sk.vertex_labels.size());
  return sk;
}

GraphSkeleton load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open edge list '" + path + "'");
  return load_edge_list(in);
}

void write_edge_list(const GraphSkeleton& skeleton, std::ostream& out) {
  out << "# undirected edge list, " << skeleton.n << " vertices, " << skeleton.edges.size()
      << " edges\n";
  for (const auto& [u, v] : skeleton.edges) {
    out << skeleton.vertex_labels[static_cast<std::size_t>(u)] << '\t'
        << skeleton.vertex_labels[static_cast<std::size_t>(v)] << '\n';
  }
}

GraphSkeleton sample_subgraph(const GraphSkeleton& skeleton, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample size must be positive");
  if (n > skeleton.n) {
    throw Error(ErrorCode::TooFewVertices, "cannot sample " + std::to_string(n) +
                                               " users from a graph with " +
                                               std::to_string(skeleton.n));
  }
  // Partial Fisher-Yates over vertex indices.
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(skeleton.n));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});
  CounterRng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto remaining = static_cast<std::uint64_t>(skeleton.n - i);
    const auto pick = i + static_cast<Eigen::Index>(rng.uniform_index(remaining));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick)]);
  }
  pool.resize(static_cast<std::size_t>(n));
  std::sort(pool.begin(), pool.end());

  std::vector<Eigen::Index> relabel(static_cast<std::size_t>(skeleton.n), -1);
  GraphSkeleton out;
  out.n = n;
  for (std::size_t k = 0; k < pool.size(); ++k) {
    relabel[static_cast<std::size_t>(pool[k])] = static_cast<Eigen::Index>(k);
    out.vertex_labels.push_back(skeleton.vertex_labels[static_cast<std::size_t>(pool[k])]);
  }
  for (const auto& [u, v] : skeleton.edges) {
    const auto ru = relabel[static_cast<std::size_t>(u)];
    const auto rv = relabel[static_cast<std::size_t>(v)];
    if (ru >= 0 && rv >= 0) out.edges.emplace_back(std::min(ru, rv), std::max(ru, rv));
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

SocialGraph assign_ties(const GraphSkeleton& skeleton, double mu_g, std::uint64_t seed) {
  SocialGraph g;
  g.n = skeleton.n;
  g.ties = Matrix::Zero(skeleton.n, skeleton.n);
  g.source = GraphSource::EdgeList;
  g.seed = seed;
  CounterRng rng(seed);
  for (const auto& [u, v] : skeleton.edges) {
    const double w = clamped_normal(rng, mu_g, g.clamped_weights);
    g.ties(u, v) = w;
    g.ties(v, u) = w;
  }
  return g;
}

bool satisfies_graph_invariants(const Matrix& ties) {
  if (ties.rows() != ties.cols()) return false;
  if (!ties.allFinite()) return false;
  for (Eigen::Index i = 0; i < ties.rows(); ++i) {
    if (ties(i, i) != 0.0) return false;
    for (Eigen::Index j = 0; j < ties.cols(); ++j) {
      if (ties(i, j) < 0.0 || ties(i, j) != ties(j, i)) return false;
    }
  }
  return true;
}

SocialGraph manual_graph(const Matrix& ties) {
  if (ties.rows() == ties.cols() && ties != ties.transpose()) {
    throw Error(ErrorCode::AsymmetricTies, "manual tie matrix is not symmetric");
  }
  if (ties.rows() < 1 || !satisfies_graph_invariants(ties)) {
    throw Error(ErrorCode::InvalidArgument,
                "manual tie matrix must be square, symmetric, nonnegative, zero-diagonal");
  }
  SocialGraph g;
  g.n = ties.rows();
  g.ties = ties;
  g.source = GraphSource::Manual;
  return g;
}

SocialGraph load_manual_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open tie matrix '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<double> row;
    std::string tok;
    while (fields >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad matrix entry at line " + std::to_string(line_no));
      }
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix ties(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n) {
      throw Error(ErrorCode::ParseError, "tie matrix is not square");
    }
    for (Eigen::Index j = 0; j < n; ++j) ties(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return manual_graph(ties);
}

GraphStats graph_stats(const SocialGraph& graph) {
  GraphStats s;
  for (Eigen::Index i = 0; i < graph.n; ++i) {
    for (Eigen::Index j = i + 1; j < graph.n; ++j) {
      if (graph.ties(i, j) > 0.0) ++s.tie_count;
    }
  }
  const double pairs = static_cast<double>(graph.n) * static_cast<double>(graph.n - 1) / 2.0;
  s.edge_probability = pairs > 0.0 ? static_cast<double>(s.tie_count) / pairs : 0.0;
  return s;
}

GraphStats graph_stats(const GraphSkeleton& skeleton) {
  GraphStats s;
  s.tie_count = static_cast<std::int64_t>(skeleton.edges.size());
  const double pairs = static_cast<double>(skeleton.n) * static_cast<double>(skeleton.n - 1) / 2.0;
  s.edge_probability = pairs > 0.0 ? static_cast<double>(s.tie_count) / pairs : 0.0;
  return s;
}

}  // namespace netprice
