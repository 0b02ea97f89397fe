#include "rgbdc/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rgbdc {

namespace {

void require_same_or_scalar(const Tensor& a, const Tensor& b, const char* op) {
  if (a.same_shape(b) || a.size() == 1 || b.size() == 1) return;
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                              b.shape_str());
}

// Elementwise combine with scalar broadcast on either side.
template <class F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  if (a.same_shape(b)) {
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
  }
  if (b.size() == 1) {
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[0]);
    return out;
  }
  Tensor out(b.shape());
  for (int64_t i = 0; i < b.size(); ++i) out[i] = f(a[0], b[i]);
  return out;
}

// Accumulate `g` into a gradient slot of shape `shape`, reducing if the slot
// is a broadcast scalar.
void accumulate(Tensor& slot, const Tensor& g) {
  if (slot.same_shape(g)) {
    for (int64_t i = 0; i < g.size(); ++i) slot[i] += g[i];
  } else if (slot.size() == 1) {
    slot[0] += g.sum();
  } else {
    throw std::logic_error("gradient accumulation shape mismatch " + slot.shape_str() + " vs " +
                           g.shape_str());
  }
}

}  // namespace

Value Tape::input(Tensor t) {
  Node n;
  n.value = std::move(t);
  n.requires_grad = true;
  n.op = "input";
  int self = static_cast<int>(nodes_.size());
  n.forward = [](const Tape& tape, const std::vector<int>&) -> Tensor {
    (void)tape;
    throw std::logic_error("leaf forward should not run");
  };
  nodes_.push_back(std::move(n));
  return Value{this, self};
}

Value Tape::constant(Tensor t) {
  Node n;
  n.value = std::move(t);
  n.requires_grad = false;
  n.op = "constant";
  int self = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(n));
  return Value{this, self};
}

void Tape::check_mine(Value v, const char* where) const {
  if (!v.valid() || v.tape != this || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument(std::string(where) + ": value does not belong to this tape");
}

Value Tape::make_node(std::vector<Value> parents, std::string op_name, ForwardFn fwd,
                      BackwardFn bwd) {
  Node n;
  n.op = std::move(op_name);
  n.parents.reserve(parents.size());
  for (Value p : parents) {
    check_mine(p, n.op.c_str());
    n.parents.push_back(p.id);
    if (nodes_[static_cast<size_t>(p.id)].requires_grad) n.requires_grad = true;
  }
  n.value = fwd(*this, n.parents);
  n.forward = std::move(fwd);
  n.backward = std::move(bwd);
  int self = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(n));
  return Value{this, self};
}

const Tensor& Tape::val(Value v) const {
  check_mine(v, "val");
  return nodes_[static_cast<size_t>(v.id)].value;
}

const Tensor& Tape::grad(Value v) const {
  check_mine(v, "grad");
  const Node& n = nodes_[static_cast<size_t>(v.id)];
  if (!n.has_grad) throw std::runtime_error("no gradient recorded for node " + n.op);
  return n.grad;
}

bool Tape::has_grad(Value v) const {
  check_mine(v, "has_grad");
  return nodes_[static_cast<size_t>(v.id)].has_grad;
}

bool Tape::requires_grad(Value v) const {
  check_mine(v, "requires_grad");
  return nodes_[static_cast<size_t>(v.id)].requires_grad;
}

Tensor& Tape::grad_slot(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.has_grad) {
    n.grad = Tensor::zeros(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Value root) {
  check_mine(root, "backward");
  const Node& r = nodes_[static_cast<size_t>(root.id)];
  if (r.value.size() != 1)
    throw std::invalid_argument("backward: root must be scalar, got shape " + r.value.shape_str());
  if (!r.requires_grad) return;
  grad_slot(root.id)[0] += 1.0;
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.requires_grad || !n.has_grad || !n.backward) continue;
    n.backward(*this, id);
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
}

void Tape::replay() {
  for (size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    if (n.op == "input" || n.op == "constant") continue;
    n.value = n.forward(*this, n.parents);
  }
}

// ---- op helpers ----

namespace {

Tape& tape_of(Value a, const char* op) {
  if (!a.valid()) throw std::invalid_argument(std::string(op) + ": invalid value handle");
  return *a.tape;
}

Tape& tape_of2(Value a, Value b, const char* op) {
  Tape& t = tape_of(a, op);
  if (b.tape != a.tape) throw std::invalid_argument(std::string(op) + ": values on different tapes");
  return t;
}

using Fwd = Tape::ForwardFn;
using Bwd = Tape::BackwardFn;

// Builds an elementwise binary op with scalar broadcast.
Value binary_op(Value a, Value b, const char* name, double (*f)(double, double),
                void (*df)(double, double, double, double&, double&)) {
  Tape& t = tape_of2(a, b, name);
  require_same_or_scalar(t.val(a), t.val(b), name);
  Fwd fwd = [f](const Tape& tp, const std::vector<int>& ps) {
    return zip(tp.node_val(ps[0]), tp.node_val(ps[1]), f);
  };
  Bwd bwd = [df](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& av = tp.node_val(ps[0]);
    const Tensor& bv = tp.node_val(ps[1]);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor ga(av.shape()), gb(bv.shape());
    const bool a_scalar = av.size() == 1 && g.size() != 1;
    const bool b_scalar = bv.size() == 1 && g.size() != 1;
    for (int64_t i = 0; i < g.size(); ++i) {
      double x = av[a_scalar ? 0 : i];
      double y = bv[b_scalar ? 0 : i];
      double da = 0, db = 0;
      df(x, y, g[i], da, db);
      ga[a_scalar ? 0 : i] += da;
      gb[b_scalar ? 0 : i] += db;
    }
    accumulate(tp.grad_slot(ps[0]), ga);
    accumulate(tp.grad_slot(ps[1]), gb);
  };
  return t.make_node({a, b}, name, std::move(fwd), std::move(bwd));
}

Value unary_op(Value a, const char* name, double (*f)(double), double (*df)(double, double)) {
  Tape& t = tape_of(a, name);
  Fwd fwd = [f](const Tape& tp, const std::vector<int>& ps) {
    const Tensor& x = tp.node_val(ps[0]);
    Tensor out(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return out;
  };
  Bwd bwd = [df](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& x = tp.node_val(ps[0]);
    const Tensor& y = tp.node_val(id);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& slot = tp.grad_slot(ps[0]);
    for (int64_t i = 0; i < x.size(); ++i) slot[i] += g[i] * df(x[i], y[i]);
  };
  return t.make_node({a}, name, std::move(fwd), std::move(bwd));
}

}  // namespace

Value add(Value a, Value b) {
  return binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double g, double& da, double& db) {
        da = g;
        db = g;
      });
}

Value sub(Value a, Value b) {
  return binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double g, double& da, double& db) {
        da = g;
        db = -g;
      });
}

Value mul(Value a, Value b) {
  return binary_op(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y, double g, double& da, double& db) {
        da = g * y;
        db = g * x;
      });
}

Value div(Value a, Value b) {
  return binary_op(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double x, double y, double g, double& da, double& db) {
        da = g / y;
        db = -g * x / (y * y);
      });
}

Value add_const(Value a, double c) {
  Value k = tape_of(a, "add_const").constant_scalar(c);
  return add(a, k);
}

Value scale(Value a, double c) {
  Value k = tape_of(a, "scale").constant_scalar(c);
  return mul(a, k);
}

Value neg(Value a) { return scale(a, -1.0); }

Value relu(Value a) {
  return unary_op(
      a, "relu", [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Value leaky_relu(Value a, double slope) {
  Tape& t = tape_of(a, "leaky_relu");
  Fwd fwd = [slope](const Tape& tp, const std::vector<int>& ps) {
    const Tensor& x = tp.node_val(ps[0]);
    Tensor out(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0 ? x[i] : slope * x[i];
    return out;
  };
  Bwd bwd = [slope](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& x = tp.node_val(ps[0]);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& slot = tp.grad_slot(ps[0]);
    for (int64_t i = 0; i < x.size(); ++i) slot[i] += g[i] * (x[i] > 0 ? 1.0 : slope);
  };
  return t.make_node({a}, "leaky_relu", std::move(fwd), std::move(bwd));
}

Value abs_val(Value a) {
  return unary_op(
      a, "abs", [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Value sigmoid(Value a) {
  return unary_op(
      a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Value softplus(Value a) {
  // log(1 + e^x) with the large-x branch to avoid overflow.
  return unary_op(
      a, "softplus",
      [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Value sin_val(Value a) {
  return unary_op(
      a, "sin", [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Value cos_val(Value a) {
  return unary_op(
      a, "cos", [](double x) { return std::cos(x); },
      [](double x, double) { return -std::sin(x); });
}

Value exp_val(Value a) {
  return unary_op(
      a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Value square(Value a) {
  return unary_op(
      a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Value sum_all(Value a) {
  Tape& t = tape_of(a, "sum");
  Fwd fwd = [](const Tape& tp, const std::vector<int>& ps) {
    return Tensor::scalar(tp.node_val(ps[0]).sum());
  };
  Bwd bwd = [](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    double g = tp.grad(Value{&tp, id})[0];
    Tensor& slot = tp.grad_slot(ps[0]);
    for (int64_t i = 0; i < slot.size(); ++i) slot[i] += g;
  };
  return t.make_node({a}, "sum", std::move(fwd), std::move(bwd));
}

Value mean_all(Value a) {
  Tape& t = tape_of(a, "mean");
  int64_t n = t.val(a).size();
  if (n == 0) throw std::invalid_argument("mean of empty tensor");
  return scale(sum_all(a), 1.0 / static_cast<double>(n));
}

Value max_all(Value a) {
  Tape& t = tape_of(a, "max");
  Fwd fwd = [](const Tape& tp, const std::vector<int>& ps) {
    return Tensor::scalar(tp.node_val(ps[0]).max());
  };
  Bwd bwd = [](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& x = tp.node_val(ps[0]);
    double g = tp.grad(Value{&tp, id})[0];
    int64_t arg = 0;
    for (int64_t i = 1; i < x.size(); ++i)
      if (x[i] > x[arg]) arg = i;
    tp.grad_slot(ps[0])[arg] += g;
  };
  return t.make_node({a}, "max", std::move(fwd), std::move(bwd));
}

Value reshape(Value a, std::vector<int> shape) {
  Tape& t = tape_of(a, "reshape");
  if (shape_size(shape) != t.val(a).size())
    throw std::invalid_argument("reshape: size mismatch " + t.val(a).shape_str() + " -> " +
                                shape_to_string(shape));
  Fwd fwd = [shape](const Tape& tp, const std::vector<int>& ps) {
    return Tensor(shape, tp.node_val(ps[0]).vec());
  };
  Bwd bwd = [](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& slot = tp.grad_slot(ps[0]);
    for (int64_t i = 0; i < g.size(); ++i) slot[i] += g[i];
  };
  return t.make_node({a}, "reshape", std::move(fwd), std::move(bwd));
}

Value broadcast_to(Value a, std::vector<int> shape) {
  Tape& t = tape_of(a, "broadcast_to");
  const std::vector<int>& src = t.val(a).shape();
  if (src.size() > shape.size())
    throw std::invalid_argument("broadcast_to: cannot reduce rank " + t.val(a).shape_str() +
                                " -> " + shape_to_string(shape));
  size_t off = shape.size() - src.size();
  for (size_t i = 0; i < src.size(); ++i)
    if (src[i] != shape[off + i])
      throw std::invalid_argument("broadcast_to: trailing dims differ " + t.val(a).shape_str() +
                                  " -> " + shape_to_string(shape));
  int64_t reps = 1;
  for (size_t i = 0; i < off; ++i) reps *= shape[i];
  Fwd fwd = [shape, reps](const Tape& tp, const std::vector<int>& ps) {
    const Tensor& x = tp.node_val(ps[0]);
    Tensor out(shape);
    int64_t n = x.size();
    for (int64_t r = 0; r < reps; ++r)
      for (int64_t i = 0; i < n; ++i) out[r * n + i] = x[i];
    return out;
  };
  Bwd bwd = [reps](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& slot = tp.grad_slot(ps[0]);
    int64_t n = slot.size();
    for (int64_t r = 0; r < reps; ++r)
      for (int64_t i = 0; i < n; ++i) slot[i] += g[r * n + i];
  };
  return t.make_node({a}, "broadcast_to", std::move(fwd), std::move(bwd));
}

Value concat(const std::vector<Value>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Tape& t = tape_of(parts[0], "concat");
  const std::vector<int>& s0 = t.val(parts[0]).shape();
  int rank = static_cast<int>(s0.size());
  if (axis < 0 || axis >= rank) throw std::invalid_argument("concat: bad axis");
  std::vector<int> out_shape = s0;
  for (size_t k = 1; k < parts.size(); ++k) {
    const std::vector<int>& sk = t.val(parts[k]).shape();
    if (static_cast<int>(sk.size()) != rank)
      throw std::invalid_argument("concat: rank mismatch " + shape_to_string(s0) + " vs " +
                                  shape_to_string(sk));
    for (int d = 0; d < rank; ++d)
      if (d != axis && sk[d] != s0[d])
        throw std::invalid_argument("concat: shape mismatch " + shape_to_string(s0) + " vs " +
                                    shape_to_string(sk));
    out_shape[axis] += sk[axis];
  }
  // outer = product of dims before axis, inner = product after.
  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= s0[d];
  for (int d = axis + 1; d < rank; ++d) inner *= s0[d];
  std::vector<int> axis_sizes;
  for (const Value& p : parts) axis_sizes.push_back(t.val(p).shape()[axis]);
  int total_axis = out_shape[axis];

  Fwd fwd = [out_shape, axis_sizes, outer, inner, total_axis](const Tape& tp,
                                                              const std::vector<int>& ps) {
    Tensor out(out_shape);
    int64_t base = 0;
    for (size_t k = 0; k < ps.size(); ++k) {
      const Tensor& x = tp.node_val(ps[k]);
      int ax = axis_sizes[k];
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t j = 0; j < ax * inner; ++j)
          out[(o * total_axis + base) * inner + j] = x[o * ax * inner + j];
      base += ax;
    }
    return out;
  };
  Bwd bwd = [axis_sizes, outer, inner, total_axis](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& g = tp.grad(Value{&tp, id});
    int64_t base = 0;
    for (size_t k = 0; k < ps.size(); ++k) {
      int ax = axis_sizes[k];
      Tensor& slot = tp.grad_slot(ps[k]);
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t j = 0; j < ax * inner; ++j)
          slot[o * ax * inner + j] += g[(o * total_axis + base) * inner + j];
      base += ax;
    }
  };
  return t.make_node(parts, "concat", std::move(fwd), std::move(bwd));
}

Value slice_last_dim(Value a, int begin, int end) {
  Tape& t = tape_of(a, "slice_last_dim");
  const std::vector<int>& s = t.val(a).shape();
  if (s.empty()) throw std::invalid_argument("slice_last_dim: scalar input");
  int last = s.back();
  if (begin < 0 || end > last || begin >= end)
    throw std::invalid_argument("slice_last_dim: bad range [" + std::to_string(begin) + "," +
                                std::to_string(end) + ") of " + std::to_string(last));
  std::vector<int> out_shape = s;
  out_shape.back() = end - begin;
  int64_t rows = t.val(a).size() / last;
  int w = end - begin;
  Fwd fwd = [out_shape, rows, last, begin, w](const Tape& tp, const std::vector<int>& ps) {
    const Tensor& x = tp.node_val(ps[0]);
    Tensor out(out_shape);
    for (int64_t r = 0; r < rows; ++r)
      for (int j = 0; j < w; ++j) out[r * w + j] = x[r * last + begin + j];
    return out;
  };
  Bwd bwd = [rows, last, begin, w](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& slot = tp.grad_slot(ps[0]);
    for (int64_t r = 0; r < rows; ++r)
      for (int j = 0; j < w; ++j) slot[r * last + begin + j] += g[r * w + j];
  };
  return t.make_node({a}, "slice_last_dim", std::move(fwd), std::move(bwd));
}

Value matmul(Value a, Value b) {
  Tape& t = tape_of2(a, b, "matmul");
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
    throw std::invalid_argument("matmul: incompatible shapes " + av.shape_str() + " x " +
                                bv.shape_str());
  int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Fwd fwd = [m, k, n](const Tape& tp, const std::vector<int>& ps) {
    const Tensor& x = tp.node_val(ps[0]);
    const Tensor& y = tp.node_val(ps[1]);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i)
      for (int kk = 0; kk < k; ++kk) {
        double xv = x[i * k + kk];
        if (xv == 0.0) continue;
        for (int j = 0; j < n; ++j) out[i * n + j] += xv * y[kk * n + j];
      }
    return out;
  };
  Bwd bwd = [m, k, n](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& x = tp.node_val(ps[0]);
    const Tensor& y = tp.node_val(ps[1]);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& ga = tp.grad_slot(ps[0]);
    Tensor& gb = tp.grad_slot(ps[1]);
    // dA = G B^T, dB = A^T G
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        double gv = g[i * n + j];
        if (gv == 0.0) continue;
        for (int kk = 0; kk < k; ++kk) {
          ga[i * k + kk] += gv * y[kk * n + j];
          gb[kk * n + j] += x[i * k + kk] * gv;
        }
      }
  };
  return t.make_node({a, b}, "matmul", std::move(fwd), std::move(bwd));
}

Value transpose2d(Value a) {
  Tape& t = tape_of(a, "transpose2d");
  const Tensor& av = t.val(a);
  if (av.rank() != 2) throw std::invalid_argument("transpose2d: need rank 2, got " + av.shape_str());
  int m = av.dim(0), n = av.dim(1);
  Fwd fwd = [m, n](const Tape& tp, const std::vector<int>& ps) {
    const Tensor& x = tp.node_val(ps[0]);
    Tensor out({n, m});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
    return out;
  };
  Bwd bwd = [m, n](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& slot = tp.grad_slot(ps[0]);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) slot[i * n + j] += g[j * m + i];
  };
  return t.make_node({a}, "transpose2d", std::move(fwd), std::move(bwd));
}

Value upsample_nearest2x(Value a) {
  Tape& t = tape_of(a, "upsample_nearest2x");
  const Tensor& av = t.val(a);
  if (av.rank() != 3)
    throw std::invalid_argument("upsample_nearest2x: need (H,W,C), got " + av.shape_str());
  int h = av.dim(0), w = av.dim(1), c = av.dim(2);
  Fwd fwd = [h, w, c](const Tape& tp, const std::vector<int>& ps) {
    const Tensor& x = tp.node_val(ps[0]);
    Tensor out({2 * h, 2 * w, c});
    for (int i = 0; i < 2 * h; ++i)
      for (int j = 0; j < 2 * w; ++j)
        for (int ch = 0; ch < c; ++ch) out.at(i, j, ch) = x.at(i / 2, j / 2, ch);
    return out;
  };
  Bwd bwd = [h, w, c](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& slot = tp.grad_slot(ps[0]);
    for (int i = 0; i < 2 * h; ++i)
      for (int j = 0; j < 2 * w; ++j)
        for (int ch = 0; ch < c; ++ch)
          slot[(static_cast<int64_t>(i / 2) * w + j / 2) * c + ch] += g.at(i, j, ch);
  };
  return t.make_node({a}, "upsample_nearest2x", std::move(fwd), std::move(bwd));
}

Tensor tree_sum(const std::vector<Tensor>& items) {
  if (items.empty()) throw std::invalid_argument("tree_sum: empty");
  std::vector<Tensor> level = items;
  while (level.size() > 1) {
    std::vector<Tensor> next;
    for (size_t i = 0; i + 1 < level.size(); i += 2) {
      Tensor s = level[i];
      const Tensor& b = level[i + 1];
      if (!s.same_shape(b)) throw std::invalid_argument("tree_sum: shape mismatch");
      for (int64_t j = 0; j < s.size(); ++j) s[j] += b[j];
      next.push_back(std::move(s));
    }
    if (level.size() % 2 == 1) next.push_back(level.back());
    level = std::move(next);
  }
  return level[0];
}

}  // namespace rgbdc
