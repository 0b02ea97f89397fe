#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rgbdc/tensor.hpp"

namespace rgbdc {

class Tape;

// Handle to a node on a tape. Cheap to copy; owns nothing.
struct Value {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

// Reverse-mode differentiation tape. Nodes are appended in topological order
// during the forward pass; backward() runs the recorded rules in reverse.
// Single-writer: one tape per computation, parallelism happens across tapes.
class Tape {
 public:
  using ForwardFn = std::function<Tensor(const Tape&, const std::vector<int>& parents)>;
  using BackwardFn = std::function<void(Tape&, int node)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that receives gradients.
  Value input(Tensor t);
  // Leaf excluded from differentiation.
  Value constant(Tensor t);
  Value constant_scalar(double v) { return constant(Tensor::scalar(v)); }

  // Generic extension point: all built-in ops and the geometry/voxel kernels
  // register through here. `fwd` must be a pure function of the parent values.
  Value make_node(std::vector<Value> parents, std::string op_name, ForwardFn fwd, BackwardFn bwd);

  const Tensor& val(Value v) const;
  const Tensor& grad(Value v) const;
  bool has_grad(Value v) const;
  bool requires_grad(Value v) const;

  // Accumulates into a node's gradient slot (allocating it at zero first).
  Tensor& grad_slot(int id);
  const std::string& op_name(int id) const { return nodes_[static_cast<size_t>(id)].op; }
  const Tensor& node_val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const std::vector<int>& parents_of(int id) const { return nodes_[static_cast<size_t>(id)].parents; }

  // Reverse sweep from a scalar root; seeds d(root)/d(root) = 1.
  void backward(Value root);
  void zero_grad();

  // Re-executes every recorded forward rule in order, overwriting stored
  // values. Used to assert replay determinism.
  void replay();

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::string op;
    std::vector<int> parents;
    ForwardFn forward;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  void check_mine(Value v, const char* where) const;
};

// ---- built-in op set ----

// Elementwise binary; shapes must match exactly or one side may be a scalar.
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value div(Value a, Value b);

Value add_const(Value a, double c);
Value scale(Value a, double c);
Value neg(Value a);

// Pointwise nonlinearities.
Value relu(Value a);
Value leaky_relu(Value a, double slope);
Value abs_val(Value a);  // subgradient 0 at the kink
Value sigmoid(Value a);
Value softplus(Value a);
Value sin_val(Value a);
Value cos_val(Value a);
Value exp_val(Value a);
Value square(Value a);

// Reductions over all elements.
Value sum_all(Value a);
Value mean_all(Value a);
Value max_all(Value a);  // gradient routed to the first argmax

// Shape ops.
Value reshape(Value a, std::vector<int> shape);
Value broadcast_to(Value a, std::vector<int> shape);  // trailing-dim alignment
Value concat(const std::vector<Value>& parts, int axis);
Value slice_last_dim(Value a, int begin, int end);

// 2-D linear algebra.
Value matmul(Value a, Value b);
Value transpose2d(Value a);

// (H, W, C) -> (2H, 2W, C) by replication.
Value upsample_nearest2x(Value a);

inline Value operator+(Value a, Value b) { return add(a, b); }
inline Value operator-(Value a, Value b) { return sub(a, b); }
inline Value operator*(Value a, Value b) { return mul(a, b); }
inline Value operator/(Value a, Value b) { return div(a, b); }

// Deterministic left-to-right pairwise tree reduction; the pinned order for
// combining per-item gradients across tapes.
Tensor tree_sum(const std::vector<Tensor>& items);

}  // namespace rgbdc
