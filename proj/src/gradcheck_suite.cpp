#include "slt/gradcheck_suite.hpp"

#include "slt/attention.hpp"
#include "slt/ccm.hpp"
#include "slt/ops.hpp"
#include "slt/posenet.hpp"
#include "slt/rng.hpp"
#include "slt/seq2sign.hpp"

namespace slt {

namespace {

constexpr double kOpTol = 1e-5;
constexpr double kCompositeTol = 1e-4;

Tensor random_input(const Shape& shape, std::uint64_t seed, double scale = 1.0,
                    bool requires_grad = true) {
  Rng rng = derive_rng(seed, {hash_str("gradcheck_input"), shape_numel(shape)});
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = normal(rng, 0.0, scale);
  return Tensor::from(shape, std::move(v), requires_grad);
}

// sum(w * y) for a fixed random w, so any output shape reduces to a scalar.
Tensor project(const Tensor& y, std::uint64_t seed) {
  return sum(multiply(y, random_input(y.shape(), seed ^ 0x5eedULL, 1.0, false)));
}

GradCheckOptions options(double tol, std::uint64_t seed, std::size_t coords = 0) {
  GradCheckOptions o;
  o.tol = tol;
  o.seed = seed;
  o.max_coords_per_input = coords;
  return o;
}

// Parameters perturbed away from their structured initial values (unit gains,
// zero biases and refinements) so every gradient path is non-trivial.
ParameterSet jitter(const ParameterSet& base, std::uint64_t seed) {
  ParameterSet out;
  for (std::size_t i = 0; i < base.size(); ++i) {
    Tensor noise = random_input(base.tensors()[i].shape(), seed + 17 * i, 0.1);
    auto v = noise.mutable_data();
    auto b = base.tensors()[i].data();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += b[k];
    out.add(base.names()[i], noise);
  }
  return out;
}

ParameterSet rebuild(const ParameterSet& like, const std::vector<Tensor>& in, std::size_t offset) {
  ParameterSet p;
  for (std::size_t i = 0; i < like.size(); ++i) p.add(like.names()[i], in[offset + i]);
  return p;
}

PoseSequence random_pose(std::size_t frames, std::uint64_t seed) {
  Rng rng = derive_rng(seed, {hash_str("gradcheck_pose")});
  PoseSequence p;
  p.num_frames = frames;
  p.frames.resize(frames * kNumKeypoints * kPoseChannels);
  for (std::size_t i = 0; i < p.frames.size(); ++i) {
    p.frames[i] = i % 3 == 2 ? uniform(rng, 0.0, 1.0) : uniform(rng, -1.0, 1.0);
  }
  return p;
}

using Unary = std::function<Tensor(const Tensor&)>;
using Binary = std::function<Tensor(const Tensor&, const Tensor&)>;

GradCheckCase unary(std::string name, Shape shape, Unary f) {
  return {name, false, [=](std::uint64_t seed) {
            return grad_check([&](const std::vector<Tensor>& in) { return project(f(in[0]), seed); },
                              {random_input(shape, seed)}, options(kOpTol, seed));
          }};
}

GradCheckCase binary(std::string name, Shape a, Shape b, Binary f) {
  return {name, false, [=](std::uint64_t seed) {
            return grad_check(
                [&](const std::vector<Tensor>& in) { return project(f(in[0], in[1]), seed); },
                {random_input(a, seed), random_input(b, seed + 1)}, options(kOpTol, seed));
          }};
}

PoseNetConfig tiny_backbone() {
  PoseNetConfig c;
  c.gcn_channels = 2;
  c.tcn_channels = 3;
  c.d_visual = 4;
  return c;
}

Seq2SignConfig tiny_seq2sign() {
  Seq2SignConfig c;
  c.encoder = {1, 2, 4, 6, 0.0, 16};
  c.decoder = {1, 2, 4, 6, 0.0, 16};
  c.vocab_size = 7;
  return c;
}

}  // namespace

std::vector<GradCheckCase> gradient_suite() {
  std::vector<GradCheckCase> cases;
  cases.push_back(binary("matmul", {3, 4}, {4, 2}, [](auto& a, auto& b) { return matmul(a, b); }));
  cases.push_back(unary("transpose", {3, 4}, [](auto& a) { return transpose(a); }));
  cases.push_back(unary("reshape", {3, 4}, [](auto& a) { return reshape(a, {2, 6}); }));
  cases.push_back(binary("concat", {2, 3}, {2, 2}, [](auto& a, auto& b) { return concat({a, b}, 1); }));
  cases.push_back(unary("slice", {4, 3}, [](auto& a) { return slice(a, 0, 1, 2); }));
  cases.push_back(binary("add", {3, 3}, {3, 3}, [](auto& a, auto& b) { return add(a, b); }));
  cases.push_back(binary("subtract", {3, 3}, {3, 3}, [](auto& a, auto& b) { return subtract(a, b); }));
  cases.push_back(binary("multiply", {3, 3}, {3, 3}, [](auto& a, auto& b) { return multiply(a, b); }));
  cases.push_back(unary("scale", {3, 3}, [](auto& a) { return scale(a, -1.7); }));
  cases.push_back(unary("add_scalar", {3, 3}, [](auto& a) { return add_scalar(a, 0.3); }));
  cases.push_back(binary("add_rowwise", {3, 4}, {4}, [](auto& a, auto& b) { return add_rowwise(a, b); }));
  cases.push_back(unary("sum", {3, 4}, [](auto& a) { return sum(a); }));
  cases.push_back(unary("mean", {3, 4}, [](auto& a) { return mean(a, 1); }));
  cases.push_back(unary("relu", {4, 5}, [](auto& a) { return relu(a); }));
  cases.push_back(unary("gelu", {4, 5}, [](auto& a) { return gelu(a); }));
  cases.push_back(unary("softmax", {3, 5}, [](auto& a) { return softmax(a, 1); }));
  cases.push_back(unary("masked_softmax", {2, 4}, [](auto& a) {
    static const std::vector<std::uint8_t> mask{1, 0, 1, 1, 0, 1, 1, 0};
    return masked_softmax(a, mask);
  }));
  cases.push_back({"layer_norm", false, [](std::uint64_t seed) {
                     return grad_check(
                         [&](const std::vector<Tensor>& in) {
                           return project(layer_norm(in[0], in[1], in[2]), seed);
                         },
                         {random_input({3, 5}, seed), random_input({5}, seed + 1),
                          random_input({5}, seed + 2)},
                         options(kOpTol, seed));
                   }});
  cases.push_back(unary("dropout", {4, 5}, [](auto& a) {
    Rng rng(7);
    return dropout(a, 0.3, true, rng);
  }));
  cases.push_back(unary("embedding_lookup", {5, 3}, [](auto& a) {
    static const std::vector<std::size_t> ids{4, 0, 4, 2};
    return embedding_lookup(a, ids);
  }));
  cases.push_back(binary("cosine_similarity", {6}, {6},
                         [](auto& a, auto& b) { return cosine_similarity(a, b); }));
  cases.push_back(unary("cross_entropy_logits", {4, 6}, [](auto& a) {
    static const std::vector<std::size_t> targets{1, 5, 0, 3};
    return cross_entropy_logits(a, targets, 0);
  }));
  cases.push_back({"graph_aggregate", false, [](std::uint64_t seed) {
                     const auto adj = SkeletonSpec::default_spec().normalized_adjacency();
                     return grad_check(
                         [&](const std::vector<Tensor>& in) {
                           return project(graph_aggregate(in[0], adj, in[1]), seed);
                         },
                         {random_input({2 * kNumKeypoints, 2}, seed),
                          random_input({2, kNumKeypoints, kNumKeypoints}, seed + 1, 0.1)},
                         options(kOpTol, seed, 150));
                   }});
  cases.push_back(unary("region_mean", {2 * kNumKeypoints, 2}, [](auto& a) {
    static const std::vector<std::vector<std::size_t>> regions{{0, 1, 2}, {10, 40, 75}};
    return region_mean(a, kNumKeypoints, regions);
  }));
  cases.push_back(binary("temporal_conv", {5 * kNumKeypoints, 2}, {6, 3}, [](auto& a, auto& b) {
    return temporal_conv(a, 5, kNumKeypoints, b, 3);
  }));
  cases.push_back({"multi_head_attention", false, [](std::uint64_t seed) {
                     ParameterSet base;
                     add_attention(base, "attn", 4, 3, 4, 4, seed);
                     ParameterSet params = jitter(base, seed);
                     std::vector<Tensor> inputs{random_input({2, 4}, seed),
                                                random_input({3, 3}, seed + 1)};
                     for (const Tensor& t : params.tensors()) inputs.push_back(t);
                     const std::vector<std::uint8_t> mask{1, 1, 0, 1, 0, 1};
                     return grad_check(
                         [&](const std::vector<Tensor>& in) {
                           ParameterSet p = rebuild(params, in, 2);
                           return project(multi_head_attention(in[0], in[1],
                                                               AttentionWeights::from(p, "attn"),
                                                               2, mask),
                                          seed);
                         },
                         inputs, options(kOpTol, seed));
                   }});

  // composites
  cases.push_back({"backbone", true, [](std::uint64_t seed) {
                     PoseNet net(tiny_backbone(), SkeletonSpec::default_spec());
                     ParameterSet base;
                     net.init_params(base, seed);
                     ParameterSet params = jitter(base, seed);
                     const PoseSequence pose = random_pose(5, seed);
                     return grad_check(
                         [&](const std::vector<Tensor>& in) {
                           return project(net.forward(rebuild(params, in, 0), pose), seed);
                         },
                         params.tensors(), options(kCompositeTol, seed, 30));
                   }});
  cases.push_back({"translation_loss", true, [](std::uint64_t seed) {
                     Seq2Sign model(tiny_seq2sign());
                     ParameterSet base;
                     model.init_params(base, seed);
                     ParameterSet params = jitter(base, seed);
                     std::vector<Tensor> inputs = params.tensors();
                     inputs.push_back(random_input({3, 4}, seed));
                     const std::vector<std::size_t> ids{1, 4, 6, 5, 2, 0};
                     return grad_check(
                         [&](const std::vector<Tensor>& in) {
                           ParameterSet p = rebuild(params, in, 0);
                           EncodedFeatures enc = model.encode(p, in.back(), {}, {});
                           return translation_loss(model.decode(p, enc, ids, {}).logits, ids, 0);
                         },
                         inputs, options(kCompositeTol, seed, 30));
                   }});
  for (bool over_mean : {true, false}) {
    cases.push_back({over_mean ? "triplet_loss_hinge_over_mean" : "triplet_loss_mean_over_hinge",
                     true, [over_mean](std::uint64_t seed) {
                       const std::vector<Triplet> triplets{{0, 0, 1}, {1, 2, 0}, {2, 1, 2}};
                       // A margin above 1 keeps every hinge active.
                       return grad_check(
                           [&](const std::vector<Tensor>& in) {
                             return triplet_loss(in[0], triplets, in[1], 1.5, over_mean);
                           },
                           {random_input({3, 3, 4}, seed), random_input({3, 4}, seed + 1)},
                           options(kCompositeTol, seed));
                     }});
  }
  cases.push_back({"joint_objective", true, [](std::uint64_t seed) {
                     PoseNet net(tiny_backbone(), SkeletonSpec::default_spec());
                     Seq2Sign model(tiny_seq2sign());
                     CcmConfig ccm;
                     ccm.heads = 2;
                     ConceptMiner miner(ccm, 4, 4);
                     AnchorVocab vocab;
                     vocab.words = {"a", "b", "c"};
                     EmbeddingInit init = load_pretrained_embeddings(std::nullopt, vocab, 4, seed);
                     ParameterSet base;
                     net.init_params(base, seed);
                     model.init_params(base, seed);
                     miner.init_params(base, init, seed);
                     ParameterSet params = jitter(base, seed);
                     const std::vector<PoseSequence> poses{random_pose(6, seed),
                                                           random_pose(4, seed + 1)};
                     const std::vector<std::vector<std::size_t>> ids{{1, 4, 5, 2}, {1, 6, 2}};
                     BatchAnchorSet batch;
                     batch.anchors = {0, 2};
                     batch.membership = {{0}, {1}};
                     batch.samples = 2;
                     const std::vector<Triplet> triplets{{0, 0, 1}, {1, 1, 0}};
                     return grad_check(
                         [&](const std::vector<Tensor>& in) {
                           ParameterSet p = rebuild(params, in, 0);
                           std::vector<EncodedFeatures> enc;
                           Tensor l_ce;
                           for (std::size_t n = 0; n < 2; ++n) {
                             enc.push_back(model.encode(p, net.forward(p, poses[n]), {}, {}));
                             Tensor ce = scale(
                                 translation_loss(model.decode(p, enc[n], ids[n], {}).logits,
                                                  ids[n], 0),
                                 (ids[n].size() - 1) / 5.0);
                             l_ce = n == 0 ? ce : add(l_ce, ce);
                           }
                           Tensor h = miner.anchor_query(p, batch, enc);
                           Tensor q = ConceptMiner::batch_queries(p, batch);
                           return combined_loss(l_ce, triplet_loss(h, triplets, q, 1.5), 0.7);
                         },
                         params.tensors(), options(kCompositeTol, seed, 12));
                   }});
  return cases;
}

}  // namespace slt
