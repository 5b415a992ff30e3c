#ifndef MAGNNETO_NN_H_
#define MAGNNETO_NN_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "magnneto/common.h"

namespace magnneto {

enum class Activation { kRelu, kLinear };

// Width of the single hidden layer used by every network in the model.
inline constexpr int kMlpHiddenWidth = 32;

// Activations recorded by Mlp::Forward; activations[0] is the input and
// activations[l + 1] the post-activation output of layer l.
struct MlpCache {
  std::vector<std::vector<double>> activations;
};

// Fully-connected network whose parameters live in one flat buffer, so
// gradients and optimizer moments are plain vectors of the same length.
// Layer l stores a row-major out x in weight block followed by its bias.
class Mlp {
 public:
  struct Layer {
    int in = 0;
    int out = 0;
    size_t weight_offset = 0;
    size_t bias_offset = 0;
    Activation activation = Activation::kLinear;
  };

  Mlp() = default;
  // dims = {in, hidden..., out}; hidden layers use relu, the last is linear.
  explicit Mlp(const std::vector<int>& dims);
  Mlp(const std::vector<int>& dims, const std::vector<Activation>& activations);

  // Input -> kMlpHiddenWidth (relu) -> output (linear).
  static Mlp OneHidden(int in_dim, int out_dim) {
    return Mlp({in_dim, kMlpHiddenWidth, out_dim});
  }

  int in_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  int out_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  const std::vector<Layer>& layers() const { return layers_; }
  size_t num_params() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)), zero biases.
  void InitGlorot(Rng& rng);

  std::vector<double> Forward(std::span<const double> input,
                              MlpCache* cache = nullptr) const;

  // Accumulates parameter gradients into `param_grad` (length num_params())
  // and, when `input_grad` is non-empty, overwrites it with dL/dinput.
  void Backward(const MlpCache& cache, std::span<const double> output_grad,
                std::span<double> param_grad, std::span<double> input_grad) const;

  bool AllFinite() const;
  bool operator==(const Mlp& o) const { return dims_ == o.dims_ && params_ == o.params_; }

 private:
  std::vector<int> dims_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 0.01;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long long step = 0;
  // beta^step, kept as running products.
  double beta1_power = 1.0;
  double beta2_power = 1.0;

  AdamState() = default;
  AdamState(size_t num_params, AdamConfig cfg)
      : config(cfg), first_moment(num_params, 0.0), second_moment(num_params, 0.0) {}
};

// One bias-corrected Adam update, in place.
void AdamStep(std::span<double> params, std::span<const double> grads, AdamState& state);

// Named tensors with shapes, serialized as text with hexadecimal floats so a
// save/load cycle is bit-exact. Layout:
//
//   MAGNNETO-CHECKPOINT 1
//   TENSORS <count>
//   TENSOR <name> <rows> <cols>
//   <rows lines of <cols> hexfloat values>
//   ...
//   END
class Checkpoint {
 public:
  struct Tensor {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    bool operator==(const Tensor&) const = default;
  };

  void Add(Tensor tensor);
  const Tensor& Get(const std::string& name) const;
  bool Has(const std::string& name) const;
  const std::vector<Tensor>& tensors() const { return tensors_; }

  // Stores / restores every layer of `mlp` under "<prefix>.layer<i>.weight|bias".
  void AddMlp(const std::string& prefix, const Mlp& mlp);
  // Throws Error(kValidation) when shapes differ from `mlp`.
  void LoadMlp(const std::string& prefix, Mlp& mlp) const;

  std::string Serialize() const;
  static Checkpoint Parse(const std::string& text);
  void Save(const std::string& path) const;
  static Checkpoint Load(const std::string& path);

  bool operator==(const Checkpoint&) const = default;

 private:
  std::vector<Tensor> tensors_;
};

}  // namespace magnneto

#endif  // MAGNNETO_NN_H_
