#ifndef MAGNNETO_GNN_H_
#define MAGNNETO_GNN_H_

#include <array>
#include <span>
#include <vector>

#include "magnneto/nn.h"
#include "magnneto/topology.h"

namespace magnneto {

inline constexpr int kHiddenDim = 16;
inline constexpr int kMessagePassingSteps = 4;
// Weight feature is fed as weight * kWeightFeatureScale.
inline constexpr double kWeightFeatureScale = 0.1;

using HiddenState = std::array<double, kHiddenDim>;

// [weight * 0.1, utilization, 0, ..., 0].
HiddenState InitHidden(int weight, double utilization);

// Links whose source node is the destination of `link`, ascending by id.
// This includes the reverse link when one exists.
const std::vector<LinkId>& Neighborhood(const Topology& topology, LinkId link);

// Link-based MPNN: message m(h_self, h_neighbor), min/max aggregation,
// update u(h_self, M) and a readout. The actor applies the readout per link
// (logits); the critic applies it once to the mean final hidden state.
struct MpnnParams {
  Mlp message;  // 2*16 -> 16
  Mlp update;   // 16 + 32 -> 16
  Mlp readout;  // 16 -> 1

  static MpnnParams Create();
  static MpnnParams CreateRandom(Rng& rng);
  size_t num_params() const;
  bool AllFinite() const;
  bool operator==(const MpnnParams&) const = default;
};

struct PolicyParams : MpnnParams {};
struct CriticParams : MpnnParams {};

PolicyParams MakePolicy(Rng& rng);
CriticParams MakeCritic(Rng& rng);

// Gradient buffers laid out like MpnnParams.
struct MpnnGrads {
  std::vector<double> message;
  std::vector<double> update;
  std::vector<double> readout;

  static MpnnGrads ZerosLike(const MpnnParams& params);
  void Add(const MpnnGrads& other, double scale = 1.0);
};

// Per-link primitives; the centralized and the replica-based executions both
// go through these so their arithmetic is identical.
//
// Aggregated message: concat(elementwise min, elementwise max) over
// m(self, neighbor) for neighbors in the given order; zeros when empty.
// When `argmin`/`argmax` are given they receive the winning neighbor index
// per component (first occurrence on ties).
std::array<double, 2 * kHiddenDim> AggregateMessages(
    const Mlp& message, const HiddenState& self,
    std::span<const HiddenState* const> neighbors,
    std::vector<MlpCache>* caches = nullptr,
    std::array<int, kHiddenDim>* argmin = nullptr,
    std::array<int, kHiddenDim>* argmax = nullptr);

HiddenState UpdateHidden(const Mlp& update, const HiddenState& self,
                         const std::array<double, 2 * kHiddenDim>& aggregated,
                         MlpCache* cache = nullptr);

double ReadoutScalar(const Mlp& readout, const HiddenState& h, MlpCache* cache = nullptr);

// Everything the backward pass needs from one forward evaluation.
struct MpnnTape {
  int steps = 0;
  std::vector<std::vector<HiddenState>> hidden;  // [k][link], k = 0..steps
  std::vector<std::vector<std::vector<MlpCache>>> message_caches;  // [k][link][nbr]
  std::vector<std::vector<std::array<int, kHiddenDim>>> argmin;    // [k][link]
  std::vector<std::vector<std::array<int, kHiddenDim>>> argmax;    // [k][link]
  std::vector<std::vector<MlpCache>> update_caches;                // [k][link]
  std::vector<MlpCache> readout_caches;  // per link (actor) or one (critic)
};

std::vector<HiddenState> InitialHiddenStates(const Topology& topology,
                                             std::span<const int> weights,
                                             std::span<const double> utilizations);

// K synchronous rounds over all links.
std::vector<HiddenState> MessagePassing(const MpnnParams& params, const Topology& topology,
                                        std::vector<HiddenState> initial, int steps,
                                        MpnnTape* tape = nullptr);

std::vector<double> ActorLogits(const PolicyParams& params, const Topology& topology,
                                std::span<const int> weights,
                                std::span<const double> utilizations,
                                int steps = kMessagePassingSteps, MpnnTape* tape = nullptr);

double CriticValue(const CriticParams& params, const Topology& topology,
                   std::span<const int> weights, std::span<const double> utilizations,
                   int steps = kMessagePassingSteps, MpnnTape* tape = nullptr);

// Reverse-mode gradients given dL/dlogits (actor) or dL/dV (critic); the
// tape must come from the matching forward call.
MpnnGrads ActorBackward(const PolicyParams& params, const Topology& topology,
                        const MpnnTape& tape, std::span<const double> logit_grad);
MpnnGrads CriticBackward(const CriticParams& params, const Topology& topology,
                         const MpnnTape& tape, double value_grad);

void SavePolicyCritic(Checkpoint& ckpt, const PolicyParams& policy,
                      const CriticParams& critic);
void LoadPolicyCritic(const Checkpoint& ckpt, PolicyParams& policy, CriticParams& critic);

}  // namespace magnneto

#endif  // MAGNNETO_GNN_H_
