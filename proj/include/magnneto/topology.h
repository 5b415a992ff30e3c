#ifndef MAGNNETO_TOPOLOGY_H_
#define MAGNNETO_TOPOLOGY_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "magnneto/common.h"

namespace magnneto {

using NodeId = int;
using LinkId = int;

struct DirectedLink {
  LinkId id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  double capacity = 0.0;
  int weight = 1;

  bool operator==(const DirectedLink&) const = default;
};

// Directed multigraph with dense node ids 0..N-1 and link ids 0..E-1.
// Construction validates every invariant, including strong connectivity,
// so a Topology instance is always routable.
class Topology {
 public:
  Topology(std::vector<std::string> labels, std::vector<DirectedLink> links);

  int num_nodes() const { return static_cast<int>(labels_.size()); }
  int num_links() const { return static_cast<int>(links_.size()); }

  const std::vector<DirectedLink>& links() const { return links_; }
  const DirectedLink& link(LinkId id) const { return links_[id]; }
  const std::string& label(NodeId n) const { return labels_[n]; }
  const std::vector<std::string>& labels() const { return labels_; }

  // Links leaving / entering a node, ascending by link id.
  const std::vector<LinkId>& out_links(NodeId n) const { return out_[n]; }
  const std::vector<LinkId>& in_links(NodeId n) const { return in_[n]; }

  std::vector<int> weights() const;
  std::vector<double> capacities() const;

  // Same graph, different weights.
  Topology WithWeights(const std::vector<int>& weights) const;

  bool operator==(const Topology& o) const {
    return labels_ == o.labels_ && links_ == o.links_;
  }

 private:
  std::vector<std::string> labels_;
  std::vector<DirectedLink> links_;
  std::vector<std::vector<LinkId>> out_;
  std::vector<std::vector<LinkId>> in_;
};

// Dense N x N demand matrix, row = source, column = destination.
class TrafficMatrix {
 public:
  explicit TrafficMatrix(int n = 0) : n_(n), demand_(size_t(n) * n, 0.0) {}

  int size() const { return n_; }
  double at(NodeId src, NodeId dst) const { return demand_[size_t(src) * n_ + dst]; }
  void set(NodeId src, NodeId dst, double rate);
  double total() const;
  TrafficMatrix Scaled(double factor) const;

  bool operator==(const TrafficMatrix&) const = default;

 private:
  int n_;
  std::vector<double> demand_;
};

// Line-oriented formats; see README for the grammar.
//
//   NODES <n>            then n lines   <id> <label>
//   EDGES <m> <directed|undirected>
//                        then m lines   <edge-id> <src> <dst> <capacity> <weight>
//   DEMANDS <k>          then k lines   <src> <dst> <rate>
//
// Undirected edge k becomes links 2k (src->dst) and 2k+1 (dst->src).
Topology ParseTopology(std::string_view text);
std::string SerializeTopology(const Topology& topology);

// Unlisted pairs are 0, duplicate pairs accumulate, diagonal entries are
// dropped.
TrafficMatrix ParseTraffic(std::string_view text, int num_nodes);
std::string SerializeTraffic(const TrafficMatrix& tm);

Topology LoadTopologyFile(const std::string& path);
TrafficMatrix LoadTrafficFile(const std::string& path, int num_nodes);
std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view contents);

}  // namespace magnneto

#endif  // MAGNNETO_TOPOLOGY_H_
