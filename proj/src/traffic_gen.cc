#include "magnneto/traffic_gen.h"

#include <cmath>

#include "magnneto/baselines.h"
#include "magnneto/routing.h"

namespace magnneto {

TrafficProfile ParseTrafficProfile(const std::string& name) {
  if (name == "uniform") return TrafficProfile::kUniform;
  if (name == "gravity") return TrafficProfile::kGravity;
  throw Error(ErrorKind::kValidation, "unknown traffic profile '" + name + "'");
}

std::string TrafficProfileName(TrafficProfile profile) {
  return profile == TrafficProfile::kUniform ? "uniform" : "gravity";
}

TrafficMatrix NormalizeToTarget(const Topology& topology, const TrafficMatrix& tm,
                                double target_util) {
  if (!(target_util > 0.0)) {
    throw Error(ErrorKind::kValidation, "target utilization must be > 0");
  }
  const auto weights = DefaultOspfWeights(topology);
  const double current = EcmpLoads(topology, tm, weights).max_utilization;
  if (current == 0.0) {
    throw Error(ErrorKind::kValidation, "cannot normalize an all-zero traffic matrix");
  }
  TrafficMatrix scaled = tm.Scaled(target_util / current);
  // One multiplicative correction absorbs the rounding of the first scale.
  const double after = EcmpLoads(topology, scaled, weights).max_utilization;
  if (after != target_util) scaled = scaled.Scaled(target_util / after);
  return scaled;
}

TrafficMatrix GenerateUniformTm(const Topology& topology, uint64_t seed,
                                double target_util) {
  if (!(target_util > 0.0)) {
    throw Error(ErrorKind::kValidation, "target utilization must be > 0");
  }
  const int n = topology.num_nodes();
  Rng rng(seed);
  TrafficMatrix tm(n);
  for (int s = 0; s < n; ++s) {
    for (int d = 0; d < n; ++d) {
      if (s != d) tm.set(s, d, UniformOpenClosed(rng));
    }
  }
  return NormalizeToTarget(topology, tm, target_util);
}

GravityTm GenerateGravityTmWithMasses(
    const Topology& topology, uint64_t seed, double target_util,
    const std::optional<std::vector<double>>& forced_masses) {
  if (!(target_util > 0.0)) {
    throw Error(ErrorKind::kValidation, "target utilization must be > 0");
  }
  const int n = topology.num_nodes();
  GravityTm out;
  if (forced_masses) {
    if (static_cast<int>(forced_masses->size()) != n) {
      throw Error(ErrorKind::kValidation, "forced mass vector length mismatch");
    }
    out.masses = *forced_masses;
  } else {
    Rng rng(seed);
    out.masses.resize(n);
    // Inverse-CDF draw from Exp(1); u in (0, 1] keeps masses finite.
    for (double& m : out.masses) m = -std::log(UniformOpenClosed(rng));
  }
  TrafficMatrix tm(n);
  for (int s = 0; s < n; ++s) {
    for (int d = 0; d < n; ++d) {
      if (s != d) tm.set(s, d, out.masses[s] * out.masses[d]);
    }
  }
  out.tm = NormalizeToTarget(topology, tm, target_util);
  return out;
}

TrafficMatrix GenerateGravityTm(const Topology& topology, uint64_t seed,
                                double target_util) {
  return GenerateGravityTmWithMasses(topology, seed, target_util).tm;
}

TrafficMatrix GenerateTm(TrafficProfile profile, const Topology& topology,
                         uint64_t seed, double target_util) {
  return profile == TrafficProfile::kUniform
             ? GenerateUniformTm(topology, seed, target_util)
             : GenerateGravityTm(topology, seed, target_util);
}

}  // namespace magnneto
