#pragma once

#include <map>
#include <random>
#include <string>

#include "steward/model.hpp"

namespace steward::reference {

/// Random DAG: nodes get a shuffled rank, edges only go from lower to higher
/// rank. Task ids are shuffled too, so id order and rank order disagree.
inline SchedulingGraph random_dag(std::mt19937_64& rng, std::size_t max_nodes = 12) {
  std::size_t n = 1 + rng() % max_nodes;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("t" + std::to_string(10 + i));
  std::shuffle(ids.begin(), ids.end(), rng);
  SchedulingGraph g;
  for (const auto& id : ids) g.nodes.push_back({{id, "notes", "task " + id, {}}, "notes"});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng() % 4 == 0) g.edges.push_back({ids[i], ids[j], "v" + std::to_string(i) + "_" + std::to_string(j)});
    }
  }
  std::shuffle(g.nodes.begin(), g.nodes.end(), rng);
  return g;
}

/// True iff `order` is a permutation of the graph's nodes respecting every edge.
inline bool respects_edges(const SchedulingGraph& g, const std::vector<GraphNode>& order) {
  if (order.size() != g.nodes.size()) return false;
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i].task.task_id] = i;
  if (pos.size() != g.nodes.size()) return false;
  for (const auto& n : g.nodes) {
    if (!pos.count(n.task.task_id)) return false;
  }
  for (const auto& e : g.edges) {
    if (pos.at(e.from) >= pos.at(e.to)) return false;
  }
  return true;
}

}  // namespace steward::reference
