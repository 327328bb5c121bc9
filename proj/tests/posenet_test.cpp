#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "slt/gradcheck.hpp"
#include "slt/ops.hpp"
#include "slt/posenet.hpp"
#include "test_util.hpp"

using namespace slt;
using slt::testing::random_tensor;
using slt::testing::weighted_sum;

namespace {

constexpr std::size_t V = kNumKeypoints;

PoseSequence random_pose(std::size_t frames, std::uint64_t seed) {
  Rng rng = derive_rng(seed, {frames});
  PoseSequence p;
  p.sample_id = "s" + std::to_string(seed);
  p.num_frames = frames;
  p.frames.resize(frames * V * 3);
  for (std::size_t i = 0; i < p.frames.size(); ++i) {
    p.frames[i] = i % 3 == 2 ? uniform(rng, 0.0, 1.0) : uniform(rng, -2.0, 2.0);
  }
  return p;
}

PoseNetConfig toy_config() {
  PoseNetConfig c;
  c.gcn_channels = 2;
  c.tcn_channels = 3;
  c.d_visual = 4;
  return c;
}

// Random refinement so the refine gradients are exercised.
ParameterSet toy_params(const PoseNet& net, std::uint64_t seed) {
  ParameterSet params;
  net.init_params(params, seed);
  ParameterSet out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.names()[i];
    const Tensor& t = params.tensors()[i];
    if (name.ends_with(".refine") || name.ends_with(".b")) {
      out.add(name, random_tensor(t.shape(), seed + i, true, 0.1));
    } else {
      out.add(name, t);
    }
  }
  return out;
}

}  // namespace

TEST(Skeleton, DefaultSpecPartitionsKeypoints) {
  SkeletonSpec s = SkeletonSpec::default_spec();
  EXPECT_NO_THROW(s.validate());
  ASSERT_EQ(s.regions.size(), 4u);
  EXPECT_EQ(s.regions[0].joints.size(), 9u);
  EXPECT_EQ(s.regions[1].joints.size(), 25u);
  EXPECT_EQ(s.regions[2].joints.size(), 21u);
  EXPECT_EQ(s.regions[3].joints.size(), 21u);
  auto a = s.normalized_adjacency();
  for (std::size_t i = 0; i < V; ++i) {
    for (std::size_t j = 0; j < V; ++j) EXPECT_DOUBLE_EQ(a[i * V + j], a[j * V + i]);
    EXPECT_GT(a[i * V + i], 0.0);
  }
}

TEST(Skeleton, ValidationAndFile) {
  SkeletonSpec s = SkeletonSpec::default_spec();
  s.regions[0].joints.push_back(9);
  EXPECT_THROW(s.validate(), ParameterError);
  s = SkeletonSpec::default_spec();
  s.regions[3].joints.pop_back();
  EXPECT_THROW(s.validate(), ParameterError);
  s = SkeletonSpec::default_spec();
  s.edges.emplace_back(0, 76);
  EXPECT_THROW(s.validate(), IndexError);

  auto path = std::filesystem::temp_directory_path() / "slt_skeleton.json";
  std::ofstream(path) << R"({"regions": {"a": [)" << [] {
    std::string s;
    for (std::size_t i = 0; i < 38; ++i) s += (i ? "," : "") + std::to_string(i);
    return s;
  }() << R"(], "b": [)" << [] {
    std::string s;
    for (std::size_t i = 38; i < 76; ++i) s += (i > 38 ? "," : "") + std::to_string(i);
    return s;
  }() << R"(]}, "edges": [[0, 1], [40, 41]], "shoulders": [0, 1], "center": "b"})";
  SkeletonSpec loaded = SkeletonSpec::load(path);
  EXPECT_EQ(loaded.regions.size(), 2u);
  EXPECT_EQ(loaded.regions[1].name, "b");
  EXPECT_EQ(loaded.center_region, 1u);
  EXPECT_EQ(loaded.shoulders, (std::pair<std::size_t, std::size_t>{0, 1}));
}

TEST(NormalizePose, FixpointOnCenteredUnitInput) {
  SkeletonSpec s = SkeletonSpec::default_spec();
  PoseSequence p = random_pose(3, 1);
  for (std::size_t t = 0; t < 3; ++t) {
    auto at = [&](std::size_t v, std::size_t c) -> double& {
      return p.frames[(t * V + v) * 3 + c];
    };
    double cx = 0, cy = 0;
    for (std::size_t j : s.regions[0].joints) cx += at(j, 0), cy += at(j, 1);
    cx /= 9, cy /= 9;
    for (std::size_t v = 0; v < V; ++v) at(v, 0) -= cx, at(v, 1) -= cy;
    const double d = std::hypot(at(2, 0) - at(5, 0), at(2, 1) - at(5, 1));
    for (std::size_t v = 0; v < V; ++v) at(v, 0) /= d, at(v, 1) /= d;
  }
  PoseSequence n = normalize_pose(p, s);
  for (std::size_t i = 0; i < p.frames.size(); ++i) EXPECT_NEAR(n.frames[i], p.frames[i], 1e-9);
}

TEST(NormalizePose, TranslationInvariantAndDegenerateSafe) {
  SkeletonSpec s = SkeletonSpec::default_spec();
  PoseSequence p = random_pose(4, 2);
  PoseSequence q = p;
  for (std::size_t i = 0; i < q.frames.size(); ++i) {
    if (i % 3 != 2) q.frames[i] += 5.0;
  }
  PoseSequence a = normalize_pose(p, s), b = normalize_pose(q, s);
  for (std::size_t i = 0; i < a.frames.size(); ++i) EXPECT_NEAR(a.frames[i], b.frames[i], 1e-9);

  PoseSequence flat = p;
  for (std::size_t i = 0; i < flat.frames.size(); ++i) {
    if (i % 3 != 2) flat.frames[i] = 0.7;
  }
  PoseSequence z = normalize_pose(flat, s);
  for (std::size_t i = 0; i < z.frames.size(); ++i) {
    ASSERT_TRUE(std::isfinite(z.frames[i]));
    if (i % 3 != 2) EXPECT_NEAR(z.frames[i], 0.0, 1e-9);
    else EXPECT_EQ(z.frames[i], flat.frames[i]);
  }
}

TEST(PoseSequence, Validation) {
  PoseSequence p = random_pose(2, 3);
  EXPECT_NO_THROW(p.validate());
  p.frames[2] = 1.5;
  EXPECT_THROW(p.validate(), ParameterError);
  p.frames.pop_back();
  EXPECT_THROW(p.validate(), ShapeError);
}

TEST(GcnBlock, DegenerateConfigIsPerNodeProjection) {
  // Zero refinement, identity adjacency, identity projection: relu(x).
  Tensor x = random_tensor({2 * V, 3}, 4, false);
  std::vector<double> identity(V * V, 0.0);
  for (std::size_t i = 0; i < V; ++i) identity[i * V + i] = 1.0;
  Tensor agg = graph_aggregate(x, identity, Tensor::zeros({3, V, V}));
  Tensor w = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor y = relu(add_rowwise(matmul(agg, w), Tensor::zeros({3})));
  for (std::size_t i = 0; i < x.numel(); ++i) {
    EXPECT_DOUBLE_EQ(y.data()[i], std::max(0.0, x.data()[i]));
  }
}

TEST(GcnBlock, ShapeContractAndErrors) {
  PoseNet net(toy_config(), SkeletonSpec::default_spec());
  ParameterSet params = toy_params(net, 5);
  Tensor x = random_tensor({4 * V, 3}, 6, false);
  EXPECT_EQ(net.gcn_block(params, "backbone.gcn1", x).shape(), (Shape{4 * V, 2}));
  EXPECT_THROW(net.gcn_block(params, "backbone.gcn2", x), ShapeError);
  EXPECT_THROW(graph_aggregate(random_tensor({V + 1, 2}, 1), SkeletonSpec::default_spec()
                                                                  .normalized_adjacency(),
                               Tensor::zeros({2, V, V})),
               ShapeError);
}

TEST(GcnBlock, GradCheck) {
  auto adj = SkeletonSpec::default_spec().normalized_adjacency();
  Tensor x = random_tensor({3 * V, 2}, 7);
  Tensor r = random_tensor({2, V, V}, 8, true, 0.1);
  Tensor w = random_tensor({2, 2}, 9);
  Tensor b = random_tensor({2}, 10);
  GradCheckOptions opts;
  opts.max_coords_per_input = 200;
  auto res = grad_check(
      [&](const std::vector<Tensor>& in) {
        Tensor agg = graph_aggregate(in[0], adj, in[1]);
        return weighted_sum(relu(add_rowwise(matmul(agg, in[2]), in[3])), 11);
      },
      {x, r, w, b}, opts);
  EXPECT_LT(res.max_rel_error, 1e-5) << "input " << res.worst_input << " coord "
                                     << res.worst_coord;
}

TEST(TcnBlock, OutputLengths) {
  for (std::size_t t : {1u, 2u, 9u, 10u, 11u}) {
    Tensor x = random_tensor({t * 2, 3}, t, false);
    Tensor w = random_tensor({9, 4}, 1, false);
    EXPECT_EQ(temporal_conv(x, t, 2, w, 3).dim(0), ((t + 1) / 2) * 2) << t;
  }
  PoseNet net(toy_config(), SkeletonSpec::default_spec());
  ParameterSet params = toy_params(net, 1);
  Tensor x = random_tensor({10 * V, 2}, 2, false);
  EXPECT_EQ(net.tcn_block(params, "backbone.tcn1", x, 10).shape(), (Shape{5 * V, 2}));
  Tensor x9 = random_tensor({9 * V, 2}, 3, false);
  EXPECT_EQ(net.tcn_block(params, "backbone.tcn1", x9, 9).shape(), (Shape{5 * V, 2}));
  Tensor x1 = random_tensor({V, 2}, 4, false);
  EXPECT_EQ(net.tcn_block(params, "backbone.tcn1", x1, 1).shape(), (Shape{V, 2}));
}

TEST(TcnBlock, EdgeReplicatePadding) {
  // One joint, one channel, kernel 3 of all-ones: out[t'] = x[c-1] + x[c] + x[c+1]
  // with c = 2t' and indices clamped into range.
  Tensor x = Tensor::from({5, 1}, {1, 2, 3, 4, 5});
  Tensor w = Tensor::full({3, 1}, 1.0);
  Tensor y = temporal_conv(x, 5, 1, w, 3);
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()),
            (std::vector<double>{1 + 1 + 2, 2 + 3 + 4, 4 + 5 + 5}));
}

TEST(TcnBlock, GradCheck) {
  PoseNet net(toy_config(), SkeletonSpec::default_spec());
  ParameterSet params = toy_params(net, 12);
  Tensor x = random_tensor({6 * V, 2}, 13);
  std::vector<Tensor> inputs{x, params.get("backbone.tcn1.k3"), params.get("backbone.tcn1.k5"),
                             params.get("backbone.tcn1.b")};
  GradCheckOptions opts;
  opts.max_coords_per_input = 200;
  auto res = grad_check(
      [&](const std::vector<Tensor>& in) {
        Tensor y = add(temporal_conv(in[0], 6, V, in[1], 3), temporal_conv(in[0], 6, V, in[2], 5));
        return weighted_sum(relu(add_rowwise(y, in[3])), 14);
      },
      inputs, opts);
  EXPECT_LT(res.max_rel_error, 1e-5);
}

TEST(RegionPool, MeansAndWidth) {
  PoseNet net(toy_config(), SkeletonSpec::default_spec());
  ParameterSet params = toy_params(net, 15);
  std::vector<double> v(2 * V * 3);
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t j = 0; j < V; ++j) {
      for (std::size_t c = 0; c < 3; ++c) v[(t * V + j) * 3 + c] = 1.0 + t + 10.0 * c;
    }
  }
  Tensor x = Tensor::from({2 * V, 3}, v);
  Tensor m = region_mean(x, V, {{0, 1, 2}, {3, 4}, {5}});
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(m.at({t, r * 3 + c}), 1.0 + t + 10.0 * c);
    }
  }
  EXPECT_EQ(net.region_pool(params, x, 2).shape(), (Shape{2, 4}));
}

TEST(RegionPool, GradCheck) {
  PoseNet net(toy_config(), SkeletonSpec::default_spec());
  ParameterSet params = toy_params(net, 16);
  Tensor x = random_tensor({2 * V, 3}, 17);
  GradCheckOptions opts;
  opts.max_coords_per_input = 200;
  auto res = grad_check(
      [&](const std::vector<Tensor>& in) {
        ParameterSet p;
        p.add("backbone.pool.w", in[1]);
        p.add("backbone.pool.b", in[2]);
        return weighted_sum(net.region_pool(p, in[0], 2), 18);
      },
      {x, params.get("backbone.pool.w"), params.get("backbone.pool.b")}, opts);
  EXPECT_LT(res.max_rel_error, 1e-5);
}

TEST(Backbone, OutputLengthContract) {
  for (std::size_t t = 1; t <= 600; ++t) {
    std::size_t a = (t + 1) / 2;
    a = (a + 1) / 2;
    ASSERT_EQ(PoseNet::output_length(t), a);
    ASSERT_EQ(PoseNet::output_length(t), static_cast<std::size_t>(std::ceil(t / 4.0)));
  }
  EXPECT_EQ(PoseNet::output_length(512), 128u);
  EXPECT_EQ(PoseNet::output_length(5), 2u);

  PoseNet net(toy_config(), SkeletonSpec::default_spec());
  ParameterSet params;
  net.init_params(params, 19);
  for (std::size_t t : {1u, 4u, 5u, 13u}) {
    EXPECT_EQ(net.forward(params, random_pose(t, t)).shape(),
              (Shape{PoseNet::output_length(t), 4}));
  }
}

TEST(Backbone, TranslationInvariantAndDeterministic) {
  PoseNet net(toy_config(), SkeletonSpec::default_spec());
  ParameterSet params = toy_params(net, 20);
  PoseSequence p = random_pose(7, 21), q = p;
  for (std::size_t i = 0; i < q.frames.size(); ++i) {
    if (i % 3 != 2) q.frames[i] += (i % 3 == 0 ? 3.0 : -4.5);
  }
  Tensor a = net.forward(params, p), b = net.forward(params, q), c = net.forward(params, p);
  for (std::size_t i = 0; i < a.numel(); ++i) {
    EXPECT_NEAR(a.data()[i], b.data()[i], 1e-6);
    EXPECT_EQ(a.data()[i], c.data()[i]);
  }
}

TEST(Backbone, EndToEndGradCheck) {
  PoseNet net(toy_config(), SkeletonSpec::default_spec());
  ParameterSet params = toy_params(net, 22);
  PoseSequence p = random_pose(5, 23);
  GradCheckOptions opts;
  opts.max_coords_per_input = 40;
  opts.tol = 1e-4;
  auto res = grad_check(
      [&](const std::vector<Tensor>& in) {
        ParameterSet ps;
        for (std::size_t i = 0; i < in.size(); ++i) ps.add(params.names()[i], in[i]);
        return weighted_sum(net.forward(ps, p), 24);
      },
      params.tensors(), opts);
  EXPECT_LT(res.max_rel_error, 1e-4) << params.names()[res.worst_input];
}
