#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "rgbdc/adam.hpp"
#include "rgbdc/dense_net.hpp"
#include "rgbdc/grad_check.hpp"
#include "rgbdc/tape.hpp"

using namespace rgbdc;

namespace {

Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

}  // namespace

TEST_CASE("sum of squares has gradient 2x") {
  std::mt19937_64 rng(7);
  Tensor x = random_tensor({4, 5}, rng);
  Tape tape;
  Value xv = tape.input(x);
  Value loss = sum_all(square(xv));
  tape.backward(loss);
  const Tensor& g = tape.grad(xv);
  for (int64_t i = 0; i < x.size(); ++i) CHECK(g[i] == doctest::Approx(2.0 * x[i]).epsilon(1e-12));
}

TEST_CASE("fan-out accumulates: d(x+x)/dx = 2 exactly") {
  Tape tape;
  Value x = tape.input(Tensor::scalar(0.37));
  Value y = x + x;
  tape.backward(y);
  CHECK(tape.grad(x)[0] == 2.0);
}

TEST_CASE("sigmoid of matmul chain matches finite differences") {
  std::mt19937_64 rng(3);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  auto fn = [](Tape& t, const std::vector<Value>& in) {
    return sum_all(sigmoid(matmul(in[0], in[1])));
  };
  GradCheckReport r = grad_check(fn, {a, b}, 1e-5, 1e-6);
  INFO(format_report(r, "sigmoid(matmul)", 1e-6));
  CHECK(r.pass());
}

TEST_CASE("shape mismatch names both shapes") {
  Tape tape;
  Value a = tape.input(Tensor::zeros({2, 3}));
  Value b = tape.input(Tensor::zeros({3, 3}));
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("[2,3]"), std::invalid_argument);
}

TEST_CASE("every built-in backward rule passes grad_check on 10 seeds") {
  struct OpCase {
    const char* name;
    TapeFn fn;
    std::vector<std::vector<int>> shapes;
    double lo, hi;
  };
  auto unary = [](Value (*op)(Value)) {
    return [op](Tape&, const std::vector<Value>& in) { return sum_all(op(in[0])); };
  };
  std::vector<OpCase> cases = {
      {"add", [](Tape&, const std::vector<Value>& in) { return sum_all(in[0] + in[1]); },
       {{3, 2}, {3, 2}}, -1, 1},
      {"sub_scalar_broadcast",
       [](Tape&, const std::vector<Value>& in) { return sum_all(square(in[0] - in[1])); },
       {{3, 2}, {}}, -1, 1},
      {"mul", [](Tape&, const std::vector<Value>& in) { return sum_all(in[0] * in[1]); },
       {{4}, {4}}, -1, 1},
      {"div", [](Tape&, const std::vector<Value>& in) { return sum_all(in[0] / in[1]); },
       {{4}, {4}}, 0.5, 2.0},
      {"relu", unary(&relu), {{8}}, 0.2, 1.5},
      {"abs", unary(&abs_val), {{8}}, 0.2, 1.5},
      {"sigmoid", unary(&sigmoid), {{8}}, -2, 2},
      {"softplus", unary(&softplus), {{8}}, -2, 2},
      {"sin", unary(&sin_val), {{8}}, -2, 2},
      {"cos", unary(&cos_val), {{8}}, -2, 2},
      {"exp", unary(&exp_val), {{8}}, -1, 1},
      {"square", unary(&square), {{8}}, -2, 2},
      {"leaky_relu",
       [](Tape&, const std::vector<Value>& in) { return sum_all(leaky_relu(in[0], 0.2)); },
       {{8}}, 0.2, 1.5},
      {"mean", [](Tape&, const std::vector<Value>& in) { return mean_all(square(in[0])); },
       {{3, 3}}, -1, 1},
      {"max", [](Tape&, const std::vector<Value>& in) { return max_all(in[0]); }, {{8}}, -1, 1},
      {"reshape",
       [](Tape&, const std::vector<Value>& in) {
         return sum_all(square(reshape(in[0], {6})));
       },
       {{2, 3}}, -1, 1},
      {"broadcast_to",
       [](Tape&, const std::vector<Value>& in) {
         return sum_all(square(broadcast_to(in[0], {4, 3})));
       },
       {{3}}, -1, 1},
      {"concat",
       [](Tape&, const std::vector<Value>& in) {
         return sum_all(square(concat({in[0], in[1]}, 0)));
       },
       {{2, 3}, {1, 3}}, -1, 1},
      {"concat_axis1",
       [](Tape&, const std::vector<Value>& in) {
         return sum_all(square(concat({in[0], in[1]}, 1)));
       },
       {{2, 2}, {2, 3}}, -1, 1},
      {"slice_last_dim",
       [](Tape&, const std::vector<Value>& in) {
         return sum_all(square(slice_last_dim(in[0], 1, 3)));
       },
       {{2, 4}}, -1, 1},
      {"matmul",
       [](Tape&, const std::vector<Value>& in) { return sum_all(square(matmul(in[0], in[1]))); },
       {{2, 3}, {3, 2}}, -1, 1},
      {"transpose2d",
       [](Tape&, const std::vector<Value>& in) {
         return sum_all(square(matmul(transpose2d(in[0]), in[0])));
       },
       {{3, 2}}, -1, 1},
      {"upsample_nearest2x",
       [](Tape&, const std::vector<Value>& in) {
         return sum_all(square(upsample_nearest2x(in[0])));
       },
       {{2, 2, 3}}, -1, 1},
  };

  for (const OpCase& c : cases) {
    CAPTURE(c.name);
    for (uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed * 7919 + 13);
      std::vector<Tensor> inputs;
      for (const auto& s : c.shapes) inputs.push_back(random_tensor(s, rng, c.lo, c.hi));
      GradCheckReport r = grad_check(c.fn, inputs, 1e-6, 1e-5);
      INFO(format_report(r, c.name, 1e-5));
      CHECK(r.pass());
    }
  }
}

TEST_CASE("grad_check on a linear function is near exact") {
  std::mt19937_64 rng(11);
  Tensor x = random_tensor({6}, rng);
  Tensor w = random_tensor({6}, rng);
  auto fn = [w](Tape& t, const std::vector<Value>& in) {
    return sum_all(in[0] * t.constant(w));
  };
  GradCheckReport r = grad_check(fn, {x}, 1e-5, 1e-10);
  CHECK(r.pass());
  CHECK(r.max_rel_err < 1e-10);
}

TEST_CASE("grad_check flags a deliberately wrong backward rule") {
  auto fn = [](Tape& tape, const std::vector<Value>& in) {
    // Forward doubles, backward pretends the factor is 3.
    Value bad = tape.make_node(
        {in[0]}, "buggy_double",
        [](const Tape& tp, const std::vector<int>& ps) {
          const Tensor& x = tp.node_val(ps[0]);
          Tensor out(x.shape());
          for (int64_t i = 0; i < x.size(); ++i) out[i] = 2.0 * x[i];
          return out;
        },
        [](Tape& tp, int id) {
          const std::vector<int>& ps = tp.parents_of(id);
          const Tensor& g = tp.grad(Value{&tp, id});
          Tensor& slot = tp.grad_slot(ps[0]);
          for (int64_t i = 0; i < g.size(); ++i) slot[i] += 3.0 * g[i];
        });
    return sum_all(bad);
  };
  std::mt19937_64 rng(5);
  GradCheckReport r = grad_check(fn, {random_tensor({4}, rng)}, 1e-5, 1e-4);
  CHECK_FALSE(r.pass());
  CHECK(r.failures.size() == 4);
}

TEST_CASE("grad_check skips kink-adjacent inputs") {
  Tensor x({3}, {-0.5, 0.0, 0.5});  // middle element sits on the relu kink
  auto fn = [](Tape&, const std::vector<Value>& in) { return sum_all(relu(in[0])); };
  GradCheckReport r = grad_check(fn, {x}, 1e-4, 1e-6);
  CHECK(r.skipped == 1);
  CHECK(r.checked == 2);
  CHECK(r.pass());
}

TEST_CASE("tape replay reproduces forward values bitwise") {
  std::mt19937_64 rng(17);
  Tape tape;
  Value a = tape.input(random_tensor({4, 4}, rng));
  Value b = tape.input(random_tensor({4, 4}, rng));
  Value out = mean_all(sigmoid(matmul(a, b)) * softplus(a - b));
  double before = tape.val(out)[0];
  tape.replay();
  CHECK(tape.val(out)[0] == before);
  // And an independent rebuild is also bitwise identical.
  Tape tape2;
  Value a2 = tape2.input(tape.val(a));
  Value b2 = tape2.input(tape.val(b));
  Value out2 = mean_all(sigmoid(matmul(a2, b2)) * softplus(a2 - b2));
  CHECK(tape2.val(out2)[0] == before);
}

TEST_CASE("tree_sum uses the pinned left-to-right pairwise order") {
  Tensor a = Tensor::scalar(1e16), b = Tensor::scalar(-1e16), c = Tensor::scalar(1.0),
         d = Tensor::scalar(2.0);
  Tensor s4 = tree_sum({a, b, c, d});
  CHECK(s4[0] == (1e16 + -1e16) + (1.0 + 2.0));
  Tensor s3 = tree_sum({a, c, b});
  CHECK(s3[0] == (1e16 + 1.0) + -1e16);
}

TEST_CASE("backward on non-scalar root is rejected") {
  Tape tape;
  Value x = tape.input(Tensor::zeros({2, 2}));
  CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged and decays moments") {
  std::vector<Tensor> params = {Tensor({2}, {1.0, -2.0})};
  std::vector<Tensor> grads = {Tensor::zeros({2})};
  AdamState st = AdamState::init(params);
  st.m[0][0] = 1.0;
  st.v[0][0] = 1.0;
  adam_step(params, grads, st, AdamConfig{0.1, 0.9, 0.999, 1e-8});
  CHECK(params[0][1] == -2.0);
  CHECK(st.m[0][0] == doctest::Approx(0.9));
  CHECK(st.v[0][0] == doctest::Approx(0.999));
}

TEST_CASE("adam: constant gradient step size approaches lr") {
  std::vector<Tensor> params = {Tensor({1}, {0.0})};
  std::vector<Tensor> grads = {Tensor({1}, {0.25})};
  AdamState st = AdamState::init(params);
  AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  double prev = params[0][0];
  double step = 0;
  for (int i = 0; i < 50; ++i) {
    adam_step(params, grads, st, cfg);
    step = prev - params[0][0];
    prev = params[0][0];
  }
  CHECK(step == doctest::Approx(cfg.lr).epsilon(0.05));
}

TEST_CASE("adam: quadratic bowl converges within 500 steps") {
  std::vector<Tensor> params = {Tensor({3}, {1.5, -0.8, 0.6})};
  AdamState st = AdamState::init(params);
  AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  for (int i = 0; i < 500; ++i) {
    std::vector<Tensor> grads = {Tensor({3})};
    for (int j = 0; j < 3; ++j) grads[0][j] = 2.0 * params[0][j];
    adam_step(params, grads, st, cfg);
  }
  for (int j = 0; j < 3; ++j) CHECK(std::fabs(params[0][j]) < 1e-3);
}

TEST_CASE("adam: NaN gradient is a hard error") {
  std::vector<Tensor> params = {Tensor({1}, {0.0})};
  std::vector<Tensor> grads = {Tensor({1}, {std::nan("")})};
  AdamState st = AdamState::init(params);
  CHECK_THROWS_AS(adam_step(params, grads, st, AdamConfig{}), std::runtime_error);
}

TEST_CASE("dense net analytic input gradient agrees with reverse mode") {
  DenseNet net;
  net.widths = {5, 7, 4, 1};
  std::mt19937_64 rng(23);
  std::vector<Tensor> params = net.init_params(23);
  Tensor x = random_tensor({3, 5}, rng);

  Tape t1;
  std::vector<Value> pv1;
  for (const Tensor& p : params) pv1.push_back(t1.constant(p));
  Value g_graph = net.input_gradient(t1, pv1, t1.constant(x));

  Tape t2;
  std::vector<Value> pv2;
  for (const Tensor& p : params) pv2.push_back(t2.constant(p));
  Value xin = t2.input(x);
  Value y = sum_all(net.forward(t2, pv2, xin));
  t2.backward(y);

  const Tensor& a = t1.val(g_graph);
  const Tensor& b = t2.grad(xin);
  REQUIRE(a.same_shape(b));
  for (int64_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
}

TEST_CASE("parameter gradients through the input-gradient graph check out") {
  DenseNet net;
  net.widths = {4, 6, 1};
  std::vector<Tensor> params = net.init_params(31);
  std::mt19937_64 rng(31);
  Tensor x = random_tensor({2, 4}, rng);
  auto fn = [&net, &x](Tape& tape, const std::vector<Value>& in) {
    Value g = net.input_gradient(tape, in, tape.constant(x));
    return sum_all(square(g));
  };
  GradCheckReport r = grad_check(fn, params, 1e-5, 1e-5);
  INFO(format_report(r, "double differentiation path", 1e-5));
  CHECK(r.pass());
}
