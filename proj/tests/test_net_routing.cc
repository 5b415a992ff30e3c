#include <cmath>
#include <string>

#include "doctest.h"
#include "magnneto/routing.h"
#include "magnneto/topology.h"
#include "test_util.h"

using namespace magnneto;
using namespace magnneto::testing;

namespace {

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::kParse;
}

std::string MessageOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("parse_topology: two nodes, one undirected edge gives two links") {
  const Topology t = ParseTopology("NODES 2\n0 a\n1 b\nEDGES 1 undirected\n0 0 1 10 1\n");
  REQUIRE(t.num_nodes() == 2);
  REQUIRE(t.num_links() == 2);
  CHECK(t.link(0).src == 0);
  CHECK(t.link(0).dst == 1);
  CHECK(t.link(1).src == 1);
  CHECK(t.link(1).dst == 0);
  CHECK(t.link(1).capacity == 10.0);
}

TEST_CASE("parse_topology: comments and blank lines are ignored") {
  const Topology t =
      ParseTopology("# net\n\nNODES 2\n0 a\n1 b\n# e\nEDGES 2 directed\n0 0 1 5 2\n1 1 0 5 3\n");
  CHECK(t.num_links() == 2);
  CHECK(t.link(1).weight == 3);
}

TEST_CASE("parse_topology: errors carry kind and line") {
  const std::string self_loop = "NODES 2\n0 a\n1 b\nEDGES 2 directed\n0 0 1 10 1\n1 1 1 10 1\n";
  CHECK(KindOf([&] { ParseTopology(self_loop); }) == ErrorKind::kValidation);
  CHECK(MessageOf([&] { ParseTopology(self_loop); }).find("self-loop at line 6") !=
        std::string::npos);
  CHECK(KindOf([] { ParseTopology("NODES 2\n0 a\n1 b\nEDGES 1 directed\n0 0 1 0 1\n"); }) ==
        ErrorKind::kValidation);
  CHECK(KindOf([] { ParseTopology("NODES 2\n0 a\n1 b\nEDGES 1 directed\n0 0 1 5 0\n"); }) ==
        ErrorKind::kValidation);
  CHECK(KindOf([] { ParseTopology("NODES 2\n0 a\n1 b\nEDGES 1 directed\n0 0 7 5 1\n"); }) ==
        ErrorKind::kValidation);
  CHECK(KindOf([] { ParseTopology("NODES x\n"); }) == ErrorKind::kParse);
  CHECK(KindOf([] { ParseTopology("EDGES 0 directed\n"); }) == ErrorKind::kParse);
  // One-way link only: not strongly connected.
  CHECK(KindOf([] { ParseTopology("NODES 2\n0 a\n1 b\nEDGES 1 directed\n0 0 1 5 1\n"); }) ==
        ErrorKind::kValidation);
}

TEST_CASE("serialize/parse topology round-trip") {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Topology t = RandomStronglyConnected(rng, 3 + i % 5);
    CHECK(ParseTopology(SerializeTopology(t)) == t);
  }
}

TEST_CASE("parse_traffic: duplicates sum, diagonal dropped, count mismatch rejected") {
  const TrafficMatrix tm = ParseTraffic("DEMANDS 3\n0 1 1.5\n0 1 2\n1 1 9\n", 2);
  CHECK(tm.at(0, 1) == 3.5);
  CHECK(tm.at(1, 1) == 0.0);
  CHECK(ParseTraffic("", 3).total() == 0.0);
  CHECK(KindOf([] { ParseTraffic("DEMANDS 2\n0 1 1\n", 2); }) == ErrorKind::kParse);
  CHECK(KindOf([] { ParseTraffic("DEMANDS 1\n0 5 1\n", 2); }) == ErrorKind::kValidation);
  CHECK(KindOf([] { ParseTraffic("DEMANDS 1\n0 1 -1\n", 2); }) == ErrorKind::kValidation);
}

TEST_CASE("serialize/parse traffic round-trip is exact") {
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const TrafficMatrix tm = RandomTm(rng, 6);
    CHECK(ParseTraffic(SerializeTraffic(tm), 6) == tm);
  }
}

TEST_CASE("traffic matrix rejects negative and non-finite demand") {
  TrafficMatrix tm(3);
  CHECK_THROWS_AS(tm.set(0, 1, -1.0), Error);
  CHECK_THROWS_AS(tm.set(0, 1, NAN), Error);
  tm.set(1, 1, 5.0);
  CHECK(tm.at(1, 1) == 0.0);
}

TEST_CASE("ecmp: single path carries the whole demand") {
  const Topology t = Bidirected(3, {{0, 1, 10}, {1, 2, 20}});
  TrafficMatrix tm(3);
  tm.set(0, 2, 5.0);
  const RoutingState s = EcmpLoads(t, tm);
  CHECK(s.load[0] == 5.0);
  CHECK(s.load[2] == 5.0);
  CHECK(s.utilization[2] == 0.25);
  CHECK(s.max_utilization == 0.5);
}

TEST_CASE("ecmp: diamond splits evenly at the source") {
  const Topology t = Diamond();
  TrafficMatrix tm(4);
  tm.set(0, 3, 8.0);
  const RoutingState s = EcmpLoads(t, tm);
  // Links: 0 A->B, 2 A->C, 4 B->D, 6 C->D.
  CHECK(s.load[0] == 4.0);
  CHECK(s.load[2] == 4.0);
  CHECK(s.load[4] == 4.0);
  CHECK(s.load[6] == 4.0);
  CHECK(s.max_utilization == QuantizeUtilization(0.4));
}

TEST_CASE("ecmp: per-node splitting, not per-path") {
  // From 2 there are two equal-cost ways to 1 (direct, and via 3); per-node
  // splitting sends half each way.
  const std::vector<DirectedLink> links = {
      {0, 0, 1, 10, 2}, {1, 0, 2, 10, 1}, {2, 2, 1, 10, 2}, {3, 2, 3, 10, 1},
      {4, 3, 1, 10, 1}, {5, 1, 0, 10, 1}, {6, 3, 2, 10, 1}};
  const Topology t({"a", "b", "c", "d"}, links);
  TrafficMatrix tm(4);
  tm.set(0, 1, 4.0);
  const RoutingState s = EcmpLoads(t, tm);
  // dist(2->1) = 2 via both 2->1 and 2->3->1; dist(0->1)=2 direct, 3 via 2.
  CHECK(s.load[0] == 4.0);
  CHECK(s.load[1] == 0.0);
  tm.set(0, 1, 0.0);
  tm.set(2, 1, 4.0);
  const RoutingState s2 = EcmpLoads(t, tm);
  CHECK(s2.load[2] == 2.0);
  CHECK(s2.load[3] == 2.0);
  CHECK(s2.load[4] == 2.0);
}

TEST_CASE("shortest-path dag distances match exhaustive enumeration") {
  Rng rng(11);
  for (int g = 0; g < 30; ++g) {
    const Topology t = RandomStronglyConnected(rng, 4 + g % 4);
    const auto w = t.weights();
    for (int d = 0; d < t.num_nodes(); ++d) {
      const ShortestPathDag dag = ComputeShortestPathDag(t, w, d);
      for (int v = 0; v < t.num_nodes(); ++v) {
        CHECK(dag.distance[v] == (v == d ? 0 : ExhaustiveDistance(t, w, v, d)));
      }
      CHECK(dag.order.back() == d);
    }
  }
}

TEST_CASE("ecmp loads match the path-enumeration oracle on random graphs") {
  Rng rng(2024);
  for (int g = 0; g < 60; ++g) {
    const Topology t = RandomStronglyConnected(rng, 4 + g % 5);
    const TrafficMatrix tm = RandomTm(rng, t.num_nodes());
    const auto w = t.weights();
    const auto oracle = OracleLoads(t, tm, w);
    const RoutingState s = EcmpLoads(t, tm, w);
    for (int e = 0; e < t.num_links(); ++e) CHECK(std::abs(s.load[e] - oracle[e]) <= 1e-9);
  }
}

TEST_CASE("per-destination flow conservation") {
  Rng rng(77);
  for (int g = 0; g < 30; ++g) {
    const Topology t = RandomStronglyConnected(rng, 5 + g % 3);
    const TrafficMatrix tm = RandomTm(rng, t.num_nodes());
    for (int d = 0; d < t.num_nodes(); ++d) {
      const auto flow = DestinationLinkFlows(t, tm, t.weights(), d);
      for (int v = 0; v < t.num_nodes(); ++v) {
        double in = 0, out = 0;
        for (LinkId e : t.in_links(v)) in += flow[e];
        for (LinkId e : t.out_links(v)) out += flow[e];
        if (v == d) {
          CHECK(out == 0.0);
          double demand = 0;
          for (int s = 0; s < t.num_nodes(); ++s) demand += tm.at(s, d);
          CHECK(std::abs(in - demand) <= 1e-9);
        } else {
          CHECK(std::abs(out - in - tm.at(v, d)) <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("objective quantization: within half a quantum, differences exact") {
  Rng rng(13);
  for (int i = 0; i < 10000; ++i) {
    const double a = 3 * Uniform01(rng), b = 1e-3 * Uniform01(rng);
    const double qa = QuantizeUtilization(a), qb = QuantizeUtilization(b);
    CHECK(std::abs(qa - a) <= kUtilizationQuantum / 2);
    // Exact subtraction: adding back recovers the operand.
    CHECK((qa - qb) + qb == qa);
    CHECK(qa - (qa - qb) == qb);
  }
  CHECK(QuantizeUtilization(0.5) == 0.5);
  CHECK(QuantizeUtilization(1e5) == 1e5);
}

TEST_CASE("zero traffic yields zero utilization") {
  const Topology t = Ring(5);
  const RoutingState s = EcmpLoads(t, TrafficMatrix(5));
  CHECK(s.max_utilization == 0.0);
}

TEST_CASE("weight vector length must match") {
  const Topology t = Ring(4);
  std::vector<int> w(3, 1);
  CHECK_THROWS_AS(EcmpLoads(t, TrafficMatrix(4), w), Error);
}
