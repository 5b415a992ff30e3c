#ifndef MAGNNETO_TRAFFIC_GEN_H_
#define MAGNNETO_TRAFFIC_GEN_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "magnneto/topology.h"

namespace magnneto {

enum class TrafficProfile { kUniform, kGravity };

TrafficProfile ParseTrafficProfile(const std::string& name);
std::string TrafficProfileName(TrafficProfile profile);

// Default target for the Default-OSPF max utilization of generated matrices.
inline constexpr double kDefaultTargetUtilization = 0.75;

// Rescales `tm` so that Default-OSPF routing reaches `target_util` max
// utilization. Fails for all-zero matrices.
TrafficMatrix NormalizeToTarget(const Topology& topology, const TrafficMatrix& tm,
                                double target_util);

// Off-diagonal entries i.i.d. uniform on (0, 1], then normalized.
TrafficMatrix GenerateUniformTm(const Topology& topology, uint64_t seed,
                                double target_util = kDefaultTargetUtilization);

struct GravityTm {
  TrafficMatrix tm;
  std::vector<double> masses;
};

// Masses i.i.d. Exp(1); demand(i, j) proportional to m_i * m_j. When
// `forced_masses` is set the draw is skipped (test hook).
GravityTm GenerateGravityTmWithMasses(
    const Topology& topology, uint64_t seed, double target_util,
    const std::optional<std::vector<double>>& forced_masses = std::nullopt);

TrafficMatrix GenerateGravityTm(const Topology& topology, uint64_t seed,
                                double target_util = kDefaultTargetUtilization);

TrafficMatrix GenerateTm(TrafficProfile profile, const Topology& topology,
                         uint64_t seed, double target_util);

}  // namespace magnneto

#endif  // MAGNNETO_TRAFFIC_GEN_H_
