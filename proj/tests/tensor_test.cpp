#include <gtest/gtest.h>

#include <cmath>
#include <unordered_map>

#include "slt/gradcheck.hpp"
#include "slt/ops.hpp"
#include "test_util.hpp"

using namespace slt;
using slt::testing::random_tensor;
using slt::testing::weighted_sum;

namespace {

void expect_values(const Tensor& t, const std::vector<double>& expected, double tol = 1e-12) {
  ASSERT_EQ(t.numel(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(t.data()[i], expected[i], tol) << i;
}

GradCheckResult check(const ScalarFunction& f, const std::vector<Tensor>& inputs) {
  GradCheckOptions opt;
  opt.tol = 1e-5;
  return grad_check(f, inputs, opt);
}

const std::vector<Shape> kShapes2d = {{3, 4}, {1, 5}, {4, 2}};

}  // namespace

TEST(TensorTest, DataLengthMatchesShape) {
  EXPECT_THROW(Tensor::from({2, 3}, {1, 2, 3}), ShapeError);
  Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.at({1, 2}), 6.0);
}

TEST(MatmulTest, IdentityAndHandProduct) {
  Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor m = Tensor::from({2, 2}, {1, 2, 3, 4});
  expect_values(matmul(eye, m), {1, 2, 3, 4});
  Tensor n = Tensor::from({2, 2}, {5, 6, 7, 8});
  expect_values(matmul(m, n), {19, 22, 43, 50});
}

TEST(MatmulTest, ShapeErrorNamesBothShapes) {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3] and [2x3]"), std::string::npos);
  }
}

TEST(MatmulTest, GradCheck) {
  auto r = check([](const auto& in) { return weighted_sum(matmul(in[0], in[1]), 1); },
                 {random_tensor({3, 4}, 1), random_tensor({4, 2}, 2)});
  EXPECT_LT(r.max_rel_error, 1e-5);
  for (auto [m, k, n] : {std::tuple{1, 3, 2}, {5, 2, 5}, {2, 6, 1}}) {
    auto r2 = check([](const auto& in) { return weighted_sum(matmul(in[0], in[1]), 3); },
                    {random_tensor({std::size_t(m), std::size_t(k)}, 4),
                     random_tensor({std::size_t(k), std::size_t(n)}, 5)});
    EXPECT_TRUE(r2.passed) << r2.max_rel_error;
  }
}

TEST(SoftmaxTest, ClosedForms) {
  expect_values(softmax(Tensor::from({2}, {0, 0}), 0), {0.5, 0.5});
  expect_values(softmax(Tensor::from({3}, {std::log(1.0), std::log(2.0), std::log(3.0)}), 0),
                {1.0 / 6, 2.0 / 6, 3.0 / 6});
}

TEST(SoftmaxTest, RowsSumToOneAndShiftInvariant) {
  for (std::size_t axis : {0u, 1u}) {
    Tensor x = random_tensor({4, 6}, 7, false, 5.0);
    Tensor y = softmax(x, axis);
    std::vector<double> shifted(x.data().begin(), x.data().end());
    for (double& v : shifted) v += 123.25;
    Tensor ys = softmax(Tensor::from({4, 6}, shifted), axis);
    for (std::size_t i = 0; i < y.numel(); ++i) {
      EXPECT_GE(y.data()[i], 0.0);
      EXPECT_NEAR(y.data()[i], ys.data()[i], 1e-9);
    }
    Tensor sums = mean(y, axis);
    for (double s : sums.data()) EXPECT_NEAR(s * static_cast<double>(x.dim(axis)), 1.0, 1e-9);
  }
}

TEST(SoftmaxTest, GradCheck) {
  auto r = check([](const auto& in) { return weighted_sum(softmax(in[0], 1), 2); },
                 {random_tensor({2, 5}, 3)});
  EXPECT_LT(r.max_rel_error, 1e-5);
  for (const Shape& s : kShapes2d) {
    for (std::size_t axis : {0u, 1u}) {
      auto r2 = check([axis](const auto& in) { return weighted_sum(softmax(in[0], axis), 9); },
                      {random_tensor(s, 11)});
      EXPECT_TRUE(r2.passed) << shape_str(s) << " axis " << axis << " " << r2.max_rel_error;
    }
  }
}

TEST(MaskedSoftmaxTest, MaskedEntriesGetZero) {
  Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  std::vector<std::uint8_t> mask = {1, 0, 1, 0, 0, 1};
  Tensor y = masked_softmax(x, mask);
  EXPECT_EQ(y.at({0, 1}), 0.0);
  EXPECT_NEAR(y.at({0, 0}) + y.at({0, 2}), 1.0, 1e-12);
  EXPECT_EQ(y.at({1, 2}), 1.0);
  auto r = check(
      [mask](const auto& in) { return weighted_sum(masked_softmax(in[0], mask), 4); },
      {random_tensor({2, 3}, 5)});
  EXPECT_TRUE(r.passed) << r.max_rel_error;
}

TEST(LayerNormTest, Fixtures) {
  Tensor g = Tensor::full({3}, 1.0), b = Tensor::zeros({3});
  expect_values(layer_norm(Tensor::from({1, 3}, {2, 2, 2}), g, b), {0, 0, 0});
  Tensor g2 = Tensor::full({2}, 1.0), b2 = Tensor::zeros({2});
  expect_values(layer_norm(Tensor::from({1, 2}, {1, 3}), g2, b2, 1e-14), {-1, 1}, 1e-9);
}

TEST(LayerNormTest, GradCheck) {
  for (const Shape& s : std::vector<Shape>{{4, 8}, {2, 3}, {5, 1, 4}}) {
    const std::size_t d = s.back();
    auto r = check(
        [](const auto& in) { return weighted_sum(layer_norm(in[0], in[1], in[2]), 6); },
        {random_tensor(s, 1), random_tensor({d}, 2), random_tensor({d}, 3)});
    EXPECT_TRUE(r.passed) << shape_str(s) << " " << r.max_rel_error;
  }
}

TEST(DropoutTest, Semantics) {
  Rng rng(1);
  Tensor x = random_tensor({3, 3}, 2, false);
  expect_values(dropout(x, 0.5, false, rng), std::vector<double>(x.data().begin(), x.data().end()));
  expect_values(dropout(x, 0.0, true, rng), std::vector<double>(x.data().begin(), x.data().end()));
  EXPECT_THROW(dropout(x, 1.0, true, rng), ParameterError);
  Tensor ones = Tensor::full({10000}, 1.0);
  Tensor y = dropout(ones, 0.5, true, rng);
  double m = 0.0;
  for (double v : y.data()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    m += v;
  }
  EXPECT_NEAR(m / 1e4, 1.0, 0.05);
}

TEST(DropoutTest, SeededMaskIsDeterministicAndDifferentiable) {
  Tensor x = random_tensor({4, 5}, 3);
  Rng a(9), b(9);
  Tensor ya = dropout(x, 0.3, true, a), yb = dropout(x, 0.3, true, b);
  expect_values(ya, std::vector<double>(yb.data().begin(), yb.data().end()), 0.0);
  auto r = check(
      [](const auto& in) {
        Rng rng(5);
        return weighted_sum(dropout(in[0], 0.3, true, rng), 2);
      },
      {x});
  EXPECT_TRUE(r.passed);
}

TEST(EmbeddingTest, GatherAndScatterAdd) {
  Tensor table = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  std::vector<std::size_t> ids0 = {0};
  expect_values(embedding_lookup(table, ids0), {1, 2});
  std::vector<std::size_t> ids = {1, 1};
  Tensor y = embedding_lookup(table, ids);
  Tensor w = Tensor::from({2, 2}, {1, 2, 10, 20});
  backward(sum(multiply(y, w)));
  expect_values(Tensor::from({3, 2}, std::vector<double>(table.grad().begin(), table.grad().end())),
                {0, 0, 11, 22, 0, 0});
  std::vector<std::size_t> bad = {3};
  try {
    embedding_lookup(table, bad);
    FAIL();
  } catch (const IndexError& e) {
    EXPECT_NE(std::string(e.what()).find("id 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("3 rows"), std::string::npos);
  }
}

TEST(EmbeddingTest, GradCheck) {
  std::vector<std::size_t> ids = {2, 0, 2};
  auto r = check([ids](const auto& in) { return weighted_sum(embedding_lookup(in[0], ids), 1); },
                 {random_tensor({5, 3}, 4)});
  EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(CosineTest, Fixtures) {
  Tensor u = Tensor::from({3}, {1, 2, 3});
  EXPECT_NEAR(cosine_similarity(u, u).item(), 1.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(Tensor::from({2}, {1, 0}), Tensor::from({2}, {0, 1})).item(), 0.0,
              1e-15);
  // eps guard keeps zero vectors finite
  EXPECT_EQ(cosine_similarity(Tensor::zeros({3}), u).item(), 0.0);
}

TEST(CosineTest, GradCheck) {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto r = check([](const auto& in) { return cosine_similarity(in[0], in[1]); },
                   {random_tensor({6}, seed), random_tensor({6}, seed + 10)});
    EXPECT_LT(r.max_rel_error, 1e-5);
  }
}

TEST(CrossEntropyTest, Fixtures) {
  std::vector<std::size_t> t = {2};
  EXPECT_NEAR(cross_entropy_logits(Tensor::zeros({1, 4}), t, 99).item(), std::log(4.0), 1e-12);
  std::vector<std::size_t> t0 = {0};
  // -log(1/(1+e^-20)) = log1p(e^-20)
  EXPECT_NEAR(cross_entropy_logits(Tensor::from({1, 2}, {10, -10}), t0, 99).item(),
              std::log1p(std::exp(-20.0)), 1e-20);
  EXPECT_NEAR(std::log1p(std::exp(-20.0)), 2.06e-9, 0.01e-9);
}

TEST(CrossEntropyTest, IgnoredPositionsContributeNothing) {
  Tensor logits = random_tensor({3, 5}, 8);
  std::vector<std::size_t> t = {1, 0, 4};
  std::vector<std::size_t> masked = {1, 7, 4};
  Tensor full = cross_entropy_logits(logits, masked, 7);
  Tensor part = cross_entropy_logits(
      concat({slice(logits, 0, 0, 1), slice(logits, 0, 2, 1)}, 0),
      std::vector<std::size_t>{1, 4}, 7);
  EXPECT_NEAR(full.item(), part.item(), 1e-14);
  backward(full);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(logits.grad()[5 + k], 0.0);
  std::vector<std::size_t> all = {7, 7, 7};
  EXPECT_THROW(cross_entropy_logits(logits, all, 7), UndefinedError);
}

TEST(CrossEntropyTest, GradCheck) {
  std::vector<std::size_t> t = {1, 0, 4};
  auto r = check([t](const auto& in) { return cross_entropy_logits(in[0], t, 99); },
                 {random_tensor({3, 5}, 12)});
  EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(PrimitiveTest, ShapesAndIdentities) {
  Tensor x = random_tensor({2, 3}, 1, false);
  Tensor zero = Tensor::zeros({2, 3});
  expect_values(add(x, zero), std::vector<double>(x.data().begin(), x.data().end()), 0.0);
  Tensor c = concat({Tensor::zeros({2, 2}), Tensor::zeros({2, 3})}, 1);
  EXPECT_EQ(c.shape(), (Shape{2, 5}));
  EXPECT_THROW(concat({Tensor::zeros({2, 2}), Tensor::zeros({3, 3})}, 1), ShapeError);
  EXPECT_THROW(add(Tensor::zeros({2, 2}), Tensor::zeros({2, 3})), ShapeError);
  EXPECT_THROW(reshape(x, {4}), ShapeError);
  EXPECT_EQ(transpose(x).shape(), (Shape{3, 2}));
  EXPECT_EQ(mean(x, 1).shape(), (Shape{2}));
  expect_values(concat({Tensor::from({1, 2}, {1, 2}), Tensor::from({1, 1}, {3})}, 1), {1, 2, 3});
  expect_values(concat({Tensor::from({1, 2}, {1, 2}), Tensor::from({1, 2}, {3, 4})}, 0),
                {1, 2, 3, 4});
  expect_values(slice(Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}), 1, 1, 2), {2, 3, 5, 6});
  expect_values(gelu(Tensor::from({1}, {0})), {0});
  expect_values(relu(Tensor::from({2}, {-1, 2})), {0, 2});
}

TEST(PrimitiveTest, EveryPrimitivePassesGradCheck) {
  struct Case {
    const char* name;
    std::function<Tensor(const std::vector<Tensor>&)> f;
    std::function<std::vector<Tensor>(const Shape&, std::uint64_t)> make;
  };
  auto one = [](const Shape& s, std::uint64_t seed) {
    return std::vector<Tensor>{random_tensor(s, seed)};
  };
  auto two = [](const Shape& s, std::uint64_t seed) {
    return std::vector<Tensor>{random_tensor(s, seed), random_tensor(s, seed + 100)};
  };
  std::vector<Case> cases = {
      {"add", [](const auto& in) { return weighted_sum(add(in[0], in[1]), 1); }, two},
      {"subtract", [](const auto& in) { return weighted_sum(subtract(in[0], in[1]), 1); }, two},
      {"multiply", [](const auto& in) { return weighted_sum(multiply(in[0], in[1]), 1); }, two},
      {"scale", [](const auto& in) { return weighted_sum(scale(in[0], -2.5), 1); }, one},
      {"add_scalar", [](const auto& in) { return weighted_sum(add_scalar(in[0], 3.0), 1); }, one},
      {"concat0", [](const auto& in) { return weighted_sum(concat({in[0], in[1]}, 0), 1); }, two},
      {"concat1", [](const auto& in) { return weighted_sum(concat({in[0], in[1]}, 1), 1); }, two},
      {"transpose", [](const auto& in) { return weighted_sum(transpose(in[0]), 1); }, one},
      {"reshape",
       [](const auto& in) { return weighted_sum(reshape(in[0], {in[0].numel()}), 1); }, one},
      {"slice", [](const auto& in) { return weighted_sum(slice(in[0], 1, 0, 1), 1); }, one},
      {"mean0", [](const auto& in) { return weighted_sum(mean(in[0], 0), 1); }, one},
      {"mean1", [](const auto& in) { return weighted_sum(mean(in[0], 1), 1); }, one},
      {"relu", [](const auto& in) { return weighted_sum(relu(in[0]), 1); }, one},
      {"gelu", [](const auto& in) { return weighted_sum(gelu(in[0]), 1); }, one},
      {"sum", [](const auto& in) { return scale(sum(in[0]), 0.7); }, one},
      {"add_rowwise",
       [](const auto& in) { return weighted_sum(add_rowwise(in[0], slice(reshape(in[1], {in[1].numel()}), 0, 0, in[0].shape().back())), 1); },
       two},
  };
  for (const Case& c : cases) {
    for (const Shape& s : kShapes2d) {
      auto r = check(c.f, c.make(s, 31));
      EXPECT_TRUE(r.passed) << c.name << " " << shape_str(s) << " err " << r.max_rel_error;
    }
  }
}

TEST(BackwardTest, AnalyticFixtures) {
  Tensor x = Tensor::from({3}, {1, 2, 3}, true);
  backward(sum(multiply(x, x)));
  expect_values(Tensor::from({3}, std::vector<double>(x.grad().begin(), x.grad().end())), {2, 4, 6});

  Tensor id = Tensor::scalar(4.0, true);
  backward(id);
  EXPECT_EQ(id.grad()[0], 1.0);

  Tensor a = Tensor::scalar(3.0, true), b = Tensor::scalar(5.0, true);
  backward(add(multiply(a, b), a));
  EXPECT_EQ(a.grad()[0], 6.0);  // b + 1
  EXPECT_EQ(b.grad()[0], 3.0);
}

TEST(BackwardTest, TwiceIsAnErrorAndRootMustBeScalar) {
  Tensor x = random_tensor({2}, 1);
  Tensor y = sum(x);
  backward(y);
  EXPECT_THROW(backward(y), GraphError);
  EXPECT_THROW(backward(multiply(x, x)), ShapeError);
}

TEST(BackwardTest, KUsesSumKGradients) {
  Tensor x = random_tensor({3, 2}, 2);
  Tensor w = random_tensor({3, 2}, 3, false);
  for (int k = 1; k <= 4; ++k) {
    x.zero_grad();
    Tensor total = sum(multiply(x, w));
    for (int i = 1; i < k; ++i) total = add(total, sum(multiply(x, w)));
    backward(total);
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(x.grad()[i], k * w.data()[i], 1e-12);
  }
}

TEST(BackwardTest, TapeIsTopological) {
  Tensor a = random_tensor({2, 2}, 1), b = random_tensor({2, 2}, 2);
  Tensor c = matmul(a, b);
  Tensor d = add(c, a);
  Tensor e = sum(multiply(d, c));
  Tape tape = Tape::record(e);
  std::unordered_map<TensorImpl*, std::size_t> pos;
  for (std::size_t i = 0; i < tape.size(); ++i) {
    EXPECT_TRUE(pos.emplace(tape.order()[i], i).second) << "node visited twice";
  }
  for (TensorImpl* t : tape.order()) {
    if (!t->node) continue;
    for (const auto& p : t->node->parents) EXPECT_LT(pos.at(p.get()), pos.at(t));
  }
  EXPECT_EQ(tape.order().back(), e.impl());
}

TEST(BackwardTest, NoGradGuardRecordsNothing) {
  Tensor x = random_tensor({2}, 1);
  NoGradGuard guard;
  Tensor y = sum(x);
  EXPECT_FALSE(y.requires_grad());
}

TEST(GradCheckTest, LinearIsExact) {
  // Central differences are exact for linear maps; only round-off in f
  // remains, which scales with |f|, so keep the inputs small.
  auto r = grad_check([](const auto& in) { return scale(sum(in[0]), 3.0); },
                      {random_tensor({4, 3}, 1, true, 1e-2)});
  EXPECT_LT(r.max_rel_error, 1e-10);
}

TEST(GradCheckTest, SoftmaxCrossEntropyComposite) {
  std::vector<std::size_t> t = {2, 1};
  auto r = grad_check(
      [t](const auto& in) {
        Tensor logits = matmul(in[0], in[1]);
        return add(cross_entropy_logits(logits, t, 99), weighted_sum(softmax(logits, 1), 2));
      },
      {random_tensor({2, 3}, 1), random_tensor({3, 4}, 2)});
  EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(GradCheckTest, DetectsWrongBackwardRule) {
  // Square with a deliberately wrong derivative (x instead of 2x).
  auto bad_square = [](const Tensor& x) {
    std::vector<double> out(x.data().begin(), x.data().end());
    for (double& v : out) v *= v;
    return make_result(x.shape(), std::move(out), {x}, "bad_square", [](const TensorImpl& o) {
      auto g = parent_grad(o, 0);
      const auto& xv = *o.node->parents[0]->data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * xv[i];
    });
  };
  auto r = grad_check([&](const auto& in) { return sum(bad_square(in[0])); },
                      {random_tensor({5}, 3)});
  EXPECT_GT(r.max_rel_error, 1e-2);
  EXPECT_FALSE(r.passed);
}

TEST(TensorTest, AliasSharesStorageWithSeparateGrad) {
  Tensor p = random_tensor({2}, 1);
  Tensor a = p.alias();
  EXPECT_TRUE(a.shares_storage(p));
  backward(sum(a));
  EXPECT_TRUE(a.has_grad());
  EXPECT_FALSE(p.has_grad());
  EXPECT_FALSE(p.detach().shares_storage(p));
}
