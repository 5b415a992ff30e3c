#include "magnneto/nn.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "magnneto/topology.h"

namespace magnneto {

namespace {

// y = W x + b, four rows at a time; each sum keeps its serial order.
void Affine(const double* w, const double* b, const double* x, int in, int out, double* y) {
  int o = 0;
  for (; o + 4 <= out; o += 4) {
    const double* r0 = w + size_t(o) * in;
    const double* r1 = r0 + in;
    const double* r2 = r1 + in;
    const double* r3 = r2 + in;
    double a0 = b[o], a1 = b[o + 1], a2 = b[o + 2], a3 = b[o + 3];
    for (int i = 0; i < in; ++i) {
      const double xi = x[i];
      a0 += r0[i] * xi;
      a1 += r1[i] * xi;
      a2 += r2[i] * xi;
      a3 += r3[i] * xi;
    }
    y[o] = a0;
    y[o + 1] = a1;
    y[o + 2] = a2;
    y[o + 3] = a3;
  }
  for (; o < out; ++o) {
    const double* row = w + size_t(o) * in;
    double acc = b[o];
    for (int i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

}  // namespace

Mlp::Mlp(const std::vector<int>& dims) {
  std::vector<Activation> acts;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    acts.push_back(i + 2 == dims.size() ? Activation::kLinear : Activation::kRelu);
  }
  *this = Mlp(dims, acts);
}

Mlp::Mlp(const std::vector<int>& dims, const std::vector<Activation>& activations)
    : dims_(dims) {
  if (dims.size() < 2 || activations.size() + 1 != dims.size()) {
    throw Error(ErrorKind::kValidation, "mlp needs one activation per layer");
  }
  size_t offset = 0;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] < 1 || dims[l + 1] < 1) {
      throw Error(ErrorKind::kValidation, "mlp layer dimensions must be positive");
    }
    Layer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.weight_offset = offset;
    offset += size_t(layer.in) * layer.out;
    layer.bias_offset = offset;
    offset += layer.out;
    layer.activation = activations[l];
    layers_.push_back(layer);
  }
  params_.assign(offset, 0.0);
}

void Mlp::InitGlorot(Rng& rng) {
  for (const Layer& layer : layers_) {
    const double a = std::sqrt(6.0 / (layer.in + layer.out));
    for (size_t i = 0; i < size_t(layer.in) * layer.out; ++i) {
      params_[layer.weight_offset + i] = (2.0 * Uniform01(rng) - 1.0) * a;
    }
    for (int j = 0; j < layer.out; ++j) params_[layer.bias_offset + j] = 0.0;
  }
}

std::vector<double> Mlp::Forward(std::span<const double> input, MlpCache* cache) const {
  if (static_cast<int>(input.size()) != in_dim()) {
    throw Error(ErrorKind::kValidation,
                "mlp input has " + std::to_string(input.size()) + " entries, expected " +
                    std::to_string(in_dim()));
  }
  std::vector<double> x(input.begin(), input.end());
  if (cache) {
    cache->activations.resize(layers_.size() + 1);
    cache->activations[0] = x;
  }
  for (size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const double* w = params_.data() + layer.weight_offset;
    const double* b = params_.data() + layer.bias_offset;
    std::vector<double> y(layer.out);
    Affine(w, b, x.data(), layer.in, layer.out, y.data());
    if (layer.activation == Activation::kRelu) {
      for (double& v : y) {
        if (!(v > 0.0)) v = 0.0;
      }
    }
    x = std::move(y);
    if (cache) cache->activations[l + 1] = x;
  }
  return x;
}

void Mlp::Backward(const MlpCache& cache, std::span<const double> output_grad,
                   std::span<double> param_grad, std::span<double> input_grad) const {
  if (cache.activations.size() != layers_.size() + 1) {
    throw Error(ErrorKind::kValidation, "mlp cache does not match network depth");
  }
  if (static_cast<int>(output_grad.size()) != out_dim() ||
      param_grad.size() != params_.size() ||
      (!input_grad.empty() && static_cast<int>(input_grad.size()) != in_dim())) {
    throw Error(ErrorKind::kValidation, "mlp gradient shape mismatch");
  }
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (size_t li = layers_.size(); li-- > 0;) {
    const Layer& layer = layers_[li];
    const std::vector<double>& x = cache.activations[li];
    const std::vector<double>& y = cache.activations[li + 1];
    if (layer.activation == Activation::kRelu) {
      // Subgradient at 0 is 0.
      for (int o = 0; o < layer.out; ++o) {
        if (!(y[o] > 0.0)) delta[o] = 0.0;
      }
    }
    double* gw = param_grad.data() + layer.weight_offset;
    double* gb = param_grad.data() + layer.bias_offset;
    for (int o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* row = gw + size_t(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) row[i] += d * x[i];
    }
    const bool need_input = li > 0 || !input_grad.empty();
    if (!need_input) break;
    std::vector<double> prev(layer.in, 0.0);
    const double* w = params_.data() + layer.weight_offset;
    for (int o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + size_t(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) prev[i] += d * row[i];
    }
    delta = std::move(prev);
  }
  if (!input_grad.empty()) {
    for (int i = 0; i < in_dim(); ++i) input_grad[i] = delta[i];
  }
}

bool Mlp::AllFinite() const {
  for (double p : params_) {
    if (!std::isfinite(p)) return false;
  }
  return true;
}

void AdamStep(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw Error(ErrorKind::kValidation, "adam shape mismatch");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  state.beta1_power *= c.beta1;
  state.beta2_power *= c.beta2;
  const double correction1 = 1.0 - state.beta1_power;
  const double correction2 = 1.0 - state.beta2_power;
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

void Checkpoint::Add(Tensor tensor) {
  if (Has(tensor.name)) {
    throw Error(ErrorKind::kValidation, "duplicate tensor '" + tensor.name + "'");
  }
  if (tensor.rows < 0 || tensor.cols < 0 ||
      size_t(tensor.rows) * tensor.cols != tensor.values.size()) {
    throw Error(ErrorKind::kValidation, "tensor '" + tensor.name + "' has inconsistent shape");
  }
  tensors_.push_back(std::move(tensor));
}

bool Checkpoint::Has(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return true;
  }
  return false;
}

const Checkpoint::Tensor& Checkpoint::Get(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw Error(ErrorKind::kValidation, "checkpoint has no tensor '" + name + "'");
}

void Checkpoint::AddMlp(const std::string& prefix, const Mlp& mlp) {
  const auto params = mlp.params();
  for (size_t l = 0; l < mlp.layers().size(); ++l) {
    const Mlp::Layer& layer = mlp.layers()[l];
    const std::string base = prefix + ".layer" + std::to_string(l);
    const auto w = params.subspan(layer.weight_offset, size_t(layer.in) * layer.out);
    const auto b = params.subspan(layer.bias_offset, layer.out);
    Add({base + ".weight", layer.out, layer.in, {w.begin(), w.end()}});
    Add({base + ".bias", layer.out, 1, {b.begin(), b.end()}});
  }
}

void Checkpoint::LoadMlp(const std::string& prefix, Mlp& mlp) const {
  auto params = mlp.params();
  for (size_t l = 0; l < mlp.layers().size(); ++l) {
    const Mlp::Layer& layer = mlp.layers()[l];
    const std::string base = prefix + ".layer" + std::to_string(l);
    const Tensor& w = Get(base + ".weight");
    const Tensor& b = Get(base + ".bias");
    if (w.rows != layer.out || w.cols != layer.in || b.rows != layer.out || b.cols != 1) {
      throw Error(ErrorKind::kValidation,
                  "checkpoint shape mismatch for '" + base + "': got " +
                      std::to_string(w.rows) + "x" + std::to_string(w.cols) +
                      ", expected " + std::to_string(layer.out) + "x" +
                      std::to_string(layer.in));
    }
    std::copy(w.values.begin(), w.values.end(), params.begin() + layer.weight_offset);
    std::copy(b.values.begin(), b.values.end(), params.begin() + layer.bias_offset);
  }
  size_t expected = 0;
  for (const auto& t : tensors_) {
    if (t.name.rfind(prefix + ".layer", 0) == 0) ++expected;
  }
  if (expected != 2 * mlp.layers().size()) {
    throw Error(ErrorKind::kValidation,
                "checkpoint layer count mismatch for '" + prefix + "'");
  }
}

std::string Checkpoint::Serialize() const {
  std::ostringstream out;
  out << "MAGNNETO-CHECKPOINT 1\n";
  out << "TENSORS " << tensors_.size() << "\n";
  char buf[64];
  for (const auto& t : tensors_) {
    out << "TENSOR " << t.name << " " << t.rows << " " << t.cols << "\n";
    for (int r = 0; r < t.rows; ++r) {
      for (int c = 0; c < t.cols; ++c) {
        std::snprintf(buf, sizeof(buf), "%a", t.values[size_t(r) * t.cols + c]);
        out << (c ? " " : "") << buf;
      }
      out << "\n";
    }
  }
  out << "END\n";
  return out.str();
}

Checkpoint Checkpoint::Parse(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "MAGNNETO-CHECKPOINT") {
    throw Error(ErrorKind::kParse, "not a checkpoint file");
  }
  if (version != 1) {
    throw Error(ErrorKind::kParse, "unsupported checkpoint version " + std::to_string(version));
  }
  size_t count = 0;
  if (!(in >> word >> count) || word != "TENSORS") {
    throw Error(ErrorKind::kParse, "checkpoint missing TENSORS header");
  }
  Checkpoint ckpt;
  for (size_t i = 0; i < count; ++i) {
    Tensor t;
    if (!(in >> word >> t.name >> t.rows >> t.cols) || word != "TENSOR" || t.rows < 0 ||
        t.cols < 0) {
      throw Error(ErrorKind::kParse, "malformed tensor header #" + std::to_string(i));
    }
    t.values.resize(size_t(t.rows) * t.cols);
    for (double& v : t.values) {
      if (!(in >> word)) throw Error(ErrorKind::kParse, "truncated tensor '" + t.name + "'");
      char* end = nullptr;
      v = std::strtod(word.c_str(), &end);
      if (end != word.c_str() + word.size()) {
        throw Error(ErrorKind::kParse, "malformed value in tensor '" + t.name + "'");
      }
    }
    ckpt.Add(std::move(t));
  }
  if (!(in >> word) || word != "END") throw Error(ErrorKind::kParse, "checkpoint missing END");
  return ckpt;
}

void Checkpoint::Save(const std::string& path) const { WriteFile(path, Serialize()); }

Checkpoint Checkpoint::Load(const std::string& path) { return Parse(ReadFile(path)); }

}  // namespace magnneto
