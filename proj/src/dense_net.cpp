#include "rgbdc/dense_net.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace rgbdc {

Value apply_activation(Value v, Activation act) {
  switch (act) {
    case Activation::Identity:
      return v;
    case Activation::Softplus:
      return softplus(v);
    case Activation::Sigmoid:
      return sigmoid(v);
    case Activation::LeakyRelu:
      return leaky_relu(v, 0.2);
  }
  throw std::logic_error("unknown activation");
}

std::vector<Tensor> DenseNet::init_params(uint64_t seed, double weight_scale) const {
  if (widths.size() < 2) throw std::invalid_argument("DenseNet: need at least in/out widths");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Tensor> params;
  for (int l = 0; l < layer_count(); ++l) {
    int in = widths[static_cast<size_t>(l)];
    int out = widths[static_cast<size_t>(l) + 1];
    Tensor w({in, out});
    double s = weight_scale / std::sqrt(static_cast<double>(in));
    for (int64_t i = 0; i < w.size(); ++i) w[i] = s * normal(rng);
    params.push_back(std::move(w));
    params.push_back(Tensor::zeros({out}));
  }
  return params;
}

Value DenseNet::forward(Tape& tape, const std::vector<Value>& params, Value x) const {
  if (static_cast<int>(params.size()) != 2 * layer_count())
    throw std::invalid_argument("DenseNet::forward: wrong parameter count");
  const Tensor& xv = tape.val(x);
  if (xv.rank() != 2 || xv.dim(1) != widths[0])
    throw std::invalid_argument("DenseNet::forward: input must be (B," +
                                std::to_string(widths[0]) + "), got " + xv.shape_str());
  int batch = xv.dim(0);
  Value h = x;
  for (int l = 0; l < layer_count(); ++l) {
    Value w = params[static_cast<size_t>(2 * l)];
    Value b = params[static_cast<size_t>(2 * l) + 1];
    Value z = matmul(h, w) + broadcast_to(b, {batch, widths[static_cast<size_t>(l) + 1]});
    h = (l + 1 < layer_count()) ? apply_activation(z, hidden) : z;
  }
  return h;
}

Value DenseNet::input_gradient(Tape& tape, const std::vector<Value>& params, Value x) const {
  if (widths.back() != 1)
    throw std::invalid_argument("DenseNet::input_gradient: output width must be 1");
  if (hidden == Activation::LeakyRelu)
    throw std::invalid_argument("DenseNet::input_gradient: needs a smooth hidden activation");
  const Tensor& xv = tape.val(x);
  int batch = xv.dim(0);

  // Forward pass keeping pre-activations.
  std::vector<Value> pre;  // z_l for l = 0..L-1
  Value h = x;
  for (int l = 0; l < layer_count(); ++l) {
    Value w = params[static_cast<size_t>(2 * l)];
    Value b = params[static_cast<size_t>(2 * l) + 1];
    Value z = matmul(h, w) + broadcast_to(b, {batch, widths[static_cast<size_t>(l) + 1]});
    pre.push_back(z);
    h = (l + 1 < layer_count()) ? apply_activation(z, hidden) : z;
  }

  // Backward chain written as forward ops: s_l = (s_{l+1} W_{l+1}^T) * act'(z_l).
  Value s = tape.constant(Tensor::full({batch, 1}, 1.0));
  for (int l = layer_count() - 1; l >= 1; --l) {
    Value wt = transpose2d(params[static_cast<size_t>(2 * l)]);
    Value u = matmul(s, wt);
    Value z = pre[static_cast<size_t>(l) - 1];
    Value dphi;
    switch (hidden) {
      case Activation::Identity:
        dphi = tape.constant(Tensor::full(tape.val(z).shape(), 1.0));
        break;
      case Activation::Softplus:
        dphi = sigmoid(z);
        break;
      case Activation::Sigmoid: {
        Value a = sigmoid(z);
        dphi = a * (tape.constant_scalar(1.0) - a);
        break;
      }
      default:
        throw std::logic_error("unsupported activation in input_gradient");
    }
    s = u * dphi;
  }
  return matmul(s, transpose2d(params[0]));
}

}  // namespace rgbdc
