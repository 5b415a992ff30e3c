#include "magnneto/gnn.h"

#include <algorithm>

namespace magnneto {

HiddenState InitHidden(int weight, double utilization) {
  HiddenState h{};
  h[0] = weight * kWeightFeatureScale;
  h[1] = utilization;
  return h;
}

const std::vector<LinkId>& Neighborhood(const Topology& topology, LinkId link) {
  return topology.out_links(topology.link(link).dst);
}

MpnnParams MpnnParams::Create() {
  return {Mlp::OneHidden(2 * kHiddenDim, kHiddenDim),
          Mlp::OneHidden(3 * kHiddenDim, kHiddenDim), Mlp::OneHidden(kHiddenDim, 1)};
}

MpnnParams MpnnParams::CreateRandom(Rng& rng) {
  MpnnParams p = Create();
  p.message.InitGlorot(rng);
  p.update.InitGlorot(rng);
  p.readout.InitGlorot(rng);
  return p;
}

size_t MpnnParams::num_params() const {
  return message.num_params() + update.num_params() + readout.num_params();
}

bool MpnnParams::AllFinite() const {
  return message.AllFinite() && update.AllFinite() && readout.AllFinite();
}

PolicyParams MakePolicy(Rng& rng) { return {MpnnParams::CreateRandom(rng)}; }
CriticParams MakeCritic(Rng& rng) { return {MpnnParams::CreateRandom(rng)}; }

MpnnGrads MpnnGrads::ZerosLike(const MpnnParams& params) {
  return {std::vector<double>(params.message.num_params(), 0.0),
          std::vector<double>(params.update.num_params(), 0.0),
          std::vector<double>(params.readout.num_params(), 0.0)};
}

void MpnnGrads::Add(const MpnnGrads& other, double scale) {
  for (size_t i = 0; i < message.size(); ++i) message[i] += scale * other.message[i];
  for (size_t i = 0; i < update.size(); ++i) update[i] += scale * other.update[i];
  for (size_t i = 0; i < readout.size(); ++i) readout[i] += scale * other.readout[i];
}

std::array<double, 2 * kHiddenDim> AggregateMessages(
    const Mlp& message, const HiddenState& self,
    std::span<const HiddenState* const> neighbors, std::vector<MlpCache>* caches,
    std::array<int, kHiddenDim>* argmin, std::array<int, kHiddenDim>* argmax) {
  std::array<double, 2 * kHiddenDim> aggregated{};
  std::array<int, kHiddenDim> min_idx{};
  std::array<int, kHiddenDim> max_idx{};
  if (caches) caches->assign(neighbors.size(), {});
  std::array<double, 2 * kHiddenDim> input;
  std::copy(self.begin(), self.end(), input.begin());
  for (size_t j = 0; j < neighbors.size(); ++j) {
    std::copy(neighbors[j]->begin(), neighbors[j]->end(), input.begin() + kHiddenDim);
    const std::vector<double> m =
        message.Forward(input, caches ? &(*caches)[j] : nullptr);
    for (int d = 0; d < kHiddenDim; ++d) {
      if (j == 0 || m[d] < aggregated[d]) {
        aggregated[d] = m[d];
        min_idx[d] = static_cast<int>(j);
      }
      if (j == 0 || m[d] > aggregated[kHiddenDim + d]) {
        aggregated[kHiddenDim + d] = m[d];
        max_idx[d] = static_cast<int>(j);
      }
    }
  }
  if (argmin) *argmin = neighbors.empty() ? std::array<int, kHiddenDim>{} : min_idx;
  if (argmax) *argmax = neighbors.empty() ? std::array<int, kHiddenDim>{} : max_idx;
  return aggregated;
}

HiddenState UpdateHidden(const Mlp& update, const HiddenState& self,
                         const std::array<double, 2 * kHiddenDim>& aggregated,
                         MlpCache* cache) {
  std::array<double, 3 * kHiddenDim> input;
  std::copy(self.begin(), self.end(), input.begin());
  std::copy(aggregated.begin(), aggregated.end(), input.begin() + kHiddenDim);
  const std::vector<double> out = update.Forward(input, cache);
  HiddenState h;
  std::copy(out.begin(), out.end(), h.begin());
  return h;
}

double ReadoutScalar(const Mlp& readout, const HiddenState& h, MlpCache* cache) {
  return readout.Forward(h, cache)[0];
}

std::vector<HiddenState> InitialHiddenStates(const Topology& topology,
                                             std::span<const int> weights,
                                             std::span<const double> utilizations) {
  const int num_links = topology.num_links();
  if (static_cast<int>(weights.size()) != num_links ||
      static_cast<int>(utilizations.size()) != num_links) {
    throw Error(ErrorKind::kValidation, "link feature length mismatch");
  }
  std::vector<HiddenState> h(num_links);
  for (int e = 0; e < num_links; ++e) h[e] = InitHidden(weights[e], utilizations[e]);
  return h;
}

std::vector<HiddenState> MessagePassing(const MpnnParams& params, const Topology& topology,
                                        std::vector<HiddenState> initial, int steps,
                                        MpnnTape* tape) {
  if (steps < 1) throw Error(ErrorKind::kValidation, "message passing needs K >= 1");
  const int num_links = topology.num_links();
  if (static_cast<int>(initial.size()) != num_links) {
    throw Error(ErrorKind::kValidation, "hidden state count mismatch");
  }
  if (tape) {
    tape->steps = steps;
    tape->hidden.assign(1, initial);
    tape->message_caches.assign(steps, std::vector<std::vector<MlpCache>>(num_links));
    tape->argmin.assign(steps, std::vector<std::array<int, kHiddenDim>>(num_links));
    tape->argmax.assign(steps, std::vector<std::array<int, kHiddenDim>>(num_links));
    tape->update_caches.assign(steps, std::vector<MlpCache>(num_links));
  }
  std::vector<HiddenState> current = std::move(initial);
  std::vector<HiddenState> next(num_links);
  std::vector<const HiddenState*> neighbors;
  for (int k = 0; k < steps; ++k) {
    for (LinkId e = 0; e < num_links; ++e) {
      const auto& nbrs = Neighborhood(topology, e);
      neighbors.clear();
      for (LinkId i : nbrs) neighbors.push_back(&current[i]);
      const auto aggregated = AggregateMessages(
          params.message, current[e], neighbors,
          tape ? &tape->message_caches[k][e] : nullptr, tape ? &tape->argmin[k][e] : nullptr,
          tape ? &tape->argmax[k][e] : nullptr);
      next[e] = UpdateHidden(params.update, current[e], aggregated,
                             tape ? &tape->update_caches[k][e] : nullptr);
    }
    std::swap(current, next);
    if (tape) tape->hidden.push_back(current);
  }
  return current;
}

std::vector<double> ActorLogits(const PolicyParams& params, const Topology& topology,
                                std::span<const int> weights,
                                std::span<const double> utilizations, int steps,
                                MpnnTape* tape) {
  const auto final_states = MessagePassing(
      params, topology, InitialHiddenStates(topology, weights, utilizations), steps, tape);
  std::vector<double> logits(final_states.size());
  if (tape) tape->readout_caches.assign(final_states.size(), {});
  for (size_t e = 0; e < final_states.size(); ++e) {
    logits[e] = ReadoutScalar(params.readout, final_states[e],
                              tape ? &tape->readout_caches[e] : nullptr);
  }
  return logits;
}

namespace {

HiddenState MeanState(const std::vector<HiddenState>& states) {
  HiddenState mean{};
  for (const auto& h : states) {
    for (int d = 0; d < kHiddenDim; ++d) mean[d] += h[d];
  }
  const double n = static_cast<double>(states.size());
  for (double& v : mean) v /= n;
  return mean;
}

// Backpropagates dL/dh^K through all message-passing rounds.
void BackwardThroughRounds(const MpnnParams& params, const Topology& topology,
                           const MpnnTape& tape, std::vector<HiddenState> grad,
                           MpnnGrads& out) {
  const int num_links = topology.num_links();
  std::vector<HiddenState> grad_prev(num_links);
  std::array<double, 3 * kHiddenDim> update_in_grad;
  std::array<double, 2 * kHiddenDim> message_in_grad;
  std::vector<std::array<double, kHiddenDim>> message_out_grad;
  for (int k = tape.steps - 1; k >= 0; --k) {
    for (auto& g : grad_prev) g.fill(0.0);
    for (LinkId e = 0; e < num_links; ++e) {
      params.update.Backward(tape.update_caches[k][e], grad[e], out.update, update_in_grad);
      for (int d = 0; d < kHiddenDim; ++d) grad_prev[e][d] += update_in_grad[d];
      const auto& nbrs = Neighborhood(topology, e);
      if (nbrs.empty()) continue;
      message_out_grad.assign(nbrs.size(), {});
      for (int d = 0; d < kHiddenDim; ++d) {
        message_out_grad[tape.argmin[k][e][d]][d] += update_in_grad[kHiddenDim + d];
        message_out_grad[tape.argmax[k][e][d]][d] += update_in_grad[2 * kHiddenDim + d];
      }
      for (size_t j = 0; j < nbrs.size(); ++j) {
        const auto& g = message_out_grad[j];
        if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) continue;
        params.message.Backward(tape.message_caches[k][e][j], g, out.message,
                                message_in_grad);
        for (int d = 0; d < kHiddenDim; ++d) {
          grad_prev[e][d] += message_in_grad[d];
          grad_prev[nbrs[j]][d] += message_in_grad[kHiddenDim + d];
        }
      }
    }
    std::swap(grad, grad_prev);
  }
}

}  // namespace

double CriticValue(const CriticParams& params, const Topology& topology,
                   std::span<const int> weights, std::span<const double> utilizations,
                   int steps, MpnnTape* tape) {
  const auto final_states = MessagePassing(
      params, topology, InitialHiddenStates(topology, weights, utilizations), steps, tape);
  if (tape) tape->readout_caches.assign(1, {});
  return ReadoutScalar(params.readout, MeanState(final_states),
                       tape ? &tape->readout_caches[0] : nullptr);
}

MpnnGrads ActorBackward(const PolicyParams& params, const Topology& topology,
                        const MpnnTape& tape, std::span<const double> logit_grad) {
  const int num_links = topology.num_links();
  if (static_cast<int>(logit_grad.size()) != num_links ||
      static_cast<int>(tape.readout_caches.size()) != num_links) {
    throw Error(ErrorKind::kValidation, "actor backward shape mismatch");
  }
  MpnnGrads grads = MpnnGrads::ZerosLike(params);
  std::vector<HiddenState> grad(num_links);
  for (LinkId e = 0; e < num_links; ++e) {
    const double g[1] = {logit_grad[e]};
    params.readout.Backward(tape.readout_caches[e], g, grads.readout, grad[e]);
  }
  BackwardThroughRounds(params, topology, tape, std::move(grad), grads);
  return grads;
}

MpnnGrads CriticBackward(const CriticParams& params, const Topology& topology,
                         const MpnnTape& tape, double value_grad) {
  if (tape.readout_caches.size() != 1) {
    throw Error(ErrorKind::kValidation, "critic backward needs a critic tape");
  }
  const int num_links = topology.num_links();
  MpnnGrads grads = MpnnGrads::ZerosLike(params);
  HiddenState mean_grad;
  const double g[1] = {value_grad};
  params.readout.Backward(tape.readout_caches[0], g, grads.readout, mean_grad);
  std::vector<HiddenState> grad(num_links);
  for (auto& h : grad) {
    for (int d = 0; d < kHiddenDim; ++d) h[d] = mean_grad[d] / num_links;
  }
  BackwardThroughRounds(params, topology, tape, std::move(grad), grads);
  return grads;
}

void SavePolicyCritic(Checkpoint& ckpt, const PolicyParams& policy,
                      const CriticParams& critic) {
  ckpt.AddMlp("actor.message", policy.message);
  ckpt.AddMlp("actor.update", policy.update);
  ckpt.AddMlp("actor.readout", policy.readout);
  ckpt.AddMlp("critic.message", critic.message);
  ckpt.AddMlp("critic.update", critic.update);
  ckpt.AddMlp("critic.readout", critic.readout);
}

void LoadPolicyCritic(const Checkpoint& ckpt, PolicyParams& policy, CriticParams& critic) {
  ckpt.LoadMlp("actor.message", policy.message);
  ckpt.LoadMlp("actor.update", policy.update);
  ckpt.LoadMlp("actor.readout", policy.readout);
  ckpt.LoadMlp("critic.message", critic.message);
  ckpt.LoadMlp("critic.update", critic.update);
  ckpt.LoadMlp("critic.readout", critic.readout);
}

}  // namespace magnneto
