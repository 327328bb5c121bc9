#include "slt/posenet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>

#include "slt/ops.hpp"

namespace slt {

namespace {

constexpr std::size_t V = kNumKeypoints;

void add_hand_edges(std::vector<std::pair<std::size_t, std::size_t>>& edges, std::size_t wrist) {
  for (std::size_t f = 0; f < 5; ++f) {
    const std::size_t base = wrist + 1 + 4 * f;
    edges.emplace_back(wrist, base);
    for (std::size_t i = 0; i < 3; ++i) edges.emplace_back(base + i, base + i + 1);
  }
}

std::vector<std::size_t> iota_range(std::size_t first, std::size_t last) {
  std::vector<std::size_t> out;
  for (std::size_t i = first; i <= last; ++i) out.push_back(i);
  return out;
}

}  // namespace

void PoseSequence::validate() const {
  if (num_frames == 0) throw ShapeError("pose sequence '" + sample_id + "' has no frames");
  if (frames.size() != num_frames * V * kPoseChannels) {
    throw ShapeError("pose sequence '" + sample_id + "' has " + std::to_string(frames.size()) +
                     " values, expected " + std::to_string(num_frames) + "x76x3");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const double x = frames[i];
    if (!std::isfinite(x)) {
      throw ParameterError("pose sequence '" + sample_id + "' has a non-finite value");
    }
    if (i % kPoseChannels == 2 && (x < 0.0 || x > 1.0)) {
      throw ParameterError("pose sequence '" + sample_id + "' has confidence " +
                           std::to_string(x) + " outside [0, 1]");
    }
  }
}

SkeletonSpec SkeletonSpec::default_spec() {
  SkeletonSpec s;
  s.regions = {{"body", iota_range(0, 8)},
               {"face", iota_range(9, 33)},
               {"left_hand", iota_range(34, 54)},
               {"right_hand", iota_range(55, 75)}};
  s.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 5}, {5, 6}, {6, 7}, {1, 8}};
  for (std::size_t i = 9; i < 33; ++i) s.edges.emplace_back(i, i + 1);
  add_hand_edges(s.edges, 34);
  add_hand_edges(s.edges, 55);
  s.edges.emplace_back(0, 9);   // nose to face contour
  s.edges.emplace_back(7, 34);  // left wrist to left hand
  s.edges.emplace_back(4, 55);  // right wrist to right hand
  return s;
}

SkeletonSpec SkeletonSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open skeleton spec " + path.string());
  SkeletonSpec s;
  try {
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
    for (const auto& [name, joints] : j.at("regions").items()) {
      s.regions.push_back({name, joints.get<std::vector<std::size_t>>()});
    }
    for (const auto& e : j.at("edges")) {
      s.edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    }
    if (j.contains("shoulders")) {
      s.shoulders = {j["shoulders"].at(0).get<std::size_t>(),
                     j["shoulders"].at(1).get<std::size_t>()};
    }
    if (j.contains("center")) {
      const auto name = j["center"].get<std::string>();
      auto it = std::find_if(s.regions.begin(), s.regions.end(),
                             [&](const SkeletonRegion& r) { return r.name == name; });
      if (it == s.regions.end()) throw FormatError("center region '" + name + "' not defined");
      s.center_region = static_cast<std::size_t>(it - s.regions.begin());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("skeleton spec " + path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

void SkeletonSpec::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["regions"] = nlohmann::ordered_json::object();
  for (const auto& r : regions) j["regions"][r.name] = r.joints;
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& [a, b] : edges) j["edges"].push_back({a, b});
  j["shoulders"] = {shoulders.first, shoulders.second};
  j["center"] = regions.at(center_region).name;
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write skeleton spec " + path.string());
  out << j.dump() << '\n';
}

void SkeletonSpec::validate() const {
  std::vector<int> owner(V, -1);
  if (regions.empty()) throw ParameterError("skeleton spec has no regions");
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (regions[r].joints.empty()) {
      throw ParameterError("skeleton region '" + regions[r].name + "' is empty");
    }
    for (std::size_t j : regions[r].joints) {
      if (j >= V) throw IndexError("skeleton joint " + std::to_string(j) + " out of range");
      if (owner[j] >= 0) {
        throw ParameterError("joint " + std::to_string(j) + " is in regions '" +
                             regions[owner[j]].name + "' and '" + regions[r].name + "'");
      }
      owner[j] = static_cast<int>(r);
    }
  }
  for (std::size_t j = 0; j < V; ++j) {
    if (owner[j] < 0) throw ParameterError("joint " + std::to_string(j) + " is in no region");
  }
  for (const auto& [a, b] : edges) {
    if (a >= V || b >= V) {
      throw IndexError("skeleton edge (" + std::to_string(a) + ", " + std::to_string(b) +
                       ") out of range");
    }
  }
  if (shoulders.first >= V || shoulders.second >= V) {
    throw IndexError("shoulder joints out of range");
  }
  if (center_region >= regions.size()) throw IndexError("center region out of range");
}

std::vector<double> SkeletonSpec::normalized_adjacency() const {
  std::vector<double> a(V * V, 0.0);
  for (std::size_t i = 0; i < V; ++i) a[i * V + i] = 1.0;
  for (const auto& [i, j] : edges) {
    a[i * V + j] = 1.0;
    a[j * V + i] = 1.0;
  }
  std::vector<double> d(V, 0.0);
  for (std::size_t i = 0; i < V; ++i) {
    for (std::size_t j = 0; j < V; ++j) d[i] += a[i * V + j];
    d[i] = 1.0 / std::sqrt(d[i]);
  }
  for (std::size_t i = 0; i < V; ++i) {
    for (std::size_t j = 0; j < V; ++j) a[i * V + j] *= d[i] * d[j];
  }
  return a;
}

PoseSequence normalize_pose(const PoseSequence& seq, const SkeletonSpec& spec, double eps) {
  PoseSequence out = seq;
  const auto& center = spec.regions.at(spec.center_region).joints;
  const auto [s0, s1] = spec.shoulders;
  for (std::size_t t = 0; t < seq.num_frames; ++t) {
    double cx = 0.0, cy = 0.0;
    for (std::size_t j : center) {
      cx += seq.at(t, j, 0);
      cy += seq.at(t, j, 1);
    }
    cx /= static_cast<double>(center.size());
    cy /= static_cast<double>(center.size());
    const double dist = std::hypot(seq.at(t, s0, 0) - seq.at(t, s1, 0),
                                   seq.at(t, s0, 1) - seq.at(t, s1, 1));
    const double inv = 1.0 / std::max(dist, eps);
    for (std::size_t v = 0; v < V; ++v) {
      double* p = out.frames.data() + (t * V + v) * kPoseChannels;
      p[0] = (seq.at(t, v, 0) - cx) * inv;
      p[1] = (seq.at(t, v, 1) - cy) * inv;
    }
  }
  return out;
}

Tensor pose_tensor(const PoseSequence& seq) {
  return Tensor::from({seq.num_frames * V, kPoseChannels}, seq.frames);
}

Tensor graph_aggregate(const Tensor& x, const std::vector<double>& adjacency,
                       const Tensor& refine) {
  if (x.rank() != 2 || x.dim(0) % V != 0) {
    throw ShapeError("graph_aggregate: expected [T*76, C], got " + shape_str(x.shape()));
  }
  const std::size_t C = x.dim(1);
  const std::size_t T = x.dim(0) / V;
  if (refine.shape() != Shape{C, V, V}) {
    throw ShapeError("graph_aggregate: refinement " + shape_str(refine.shape()) +
                     " does not match " + shape_str({C, V, V}));
  }
  if (adjacency.size() != V * V) throw ShapeError("graph_aggregate: adjacency must be 76x76");

  // m[v, u, c] = A[v, u] + R[c, v, u], laid out so the channel loop is contiguous.
  auto m = std::make_shared<std::vector<double>>(V * V * C);
  const double* r = refine.data().data();
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t vu = 0; vu < V * V; ++vu) (*m)[vu * C + c] = adjacency[vu] + r[c * V * V + vu];
  }
  const double* xv = x.data().data();
  std::vector<double> out(T * V * C, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t v = 0; v < V; ++v) {
      double* o = out.data() + (t * V + v) * C;
      for (std::size_t u = 0; u < V; ++u) {
        const double* mr = m->data() + (v * V + u) * C;
        const double* xr = xv + (t * V + u) * C;
        for (std::size_t c = 0; c < C; ++c) o[c] += mr[c] * xr[c];
      }
    }
  }
  return make_result(x.shape(), std::move(out), {x, refine}, "graph_aggregate",
                     [m, T, C](const TensorImpl& o) {
                       const double* g = o.grad.data();
                       const double* xv = o.node->parents[0]->data->data();
                       auto gx = parent_grad(o, 0);
                       auto gr = parent_grad(o, 1);
                       std::vector<double> gm;
                       if (!gr.empty()) gm.assign(V * V * C, 0.0);
                       for (std::size_t t = 0; t < T; ++t) {
                         for (std::size_t v = 0; v < V; ++v) {
                           const double* gv = g + (t * V + v) * C;
                           for (std::size_t u = 0; u < V; ++u) {
                             const std::size_t row = (t * V + u) * C;
                             if (!gx.empty()) {
                               const double* mr = m->data() + (v * V + u) * C;
                               for (std::size_t c = 0; c < C; ++c) gx[row + c] += mr[c] * gv[c];
                             }
                             if (!gm.empty()) {
                               double* gmr = gm.data() + (v * V + u) * C;
                               for (std::size_t c = 0; c < C; ++c) gmr[c] += gv[c] * xv[row + c];
                             }
                           }
                         }
                       }
                       if (!gr.empty()) {
                         for (std::size_t c = 0; c < C; ++c) {
                           for (std::size_t vu = 0; vu < V * V; ++vu) {
                             gr[c * V * V + vu] += gm[vu * C + c];
                           }
                         }
                       }
                     });
}

Tensor region_mean(const Tensor& x, std::size_t joints,
                   const std::vector<std::vector<std::size_t>>& regions) {
  if (x.rank() != 2 || x.dim(0) % joints != 0) {
    throw ShapeError("region_mean: expected [T*" + std::to_string(joints) + ", C], got " +
                     shape_str(x.shape()));
  }
  const std::size_t C = x.dim(1), T = x.dim(0) / joints, R = regions.size();
  const double* xv = x.data().data();
  std::vector<double> out(T * R * C, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t r = 0; r < R; ++r) {
      double* o = out.data() + (t * R + r) * C;
      const double inv = 1.0 / static_cast<double>(regions[r].size());
      for (std::size_t j : regions[r]) {
        const double* xr = xv + (t * joints + j) * C;
        for (std::size_t c = 0; c < C; ++c) o[c] += xr[c] * inv;
      }
    }
  }
  return make_result({T, R * C}, std::move(out), {x}, "region_mean",
                     [regions, joints, T, C, R](const TensorImpl& o) {
                       auto gx = parent_grad(o, 0);
                       const double* g = o.grad.data();
                       for (std::size_t t = 0; t < T; ++t) {
                         for (std::size_t r = 0; r < R; ++r) {
                           const double* gr = g + (t * R + r) * C;
                           const double inv = 1.0 / static_cast<double>(regions[r].size());
                           for (std::size_t j : regions[r]) {
                             double* gxr = gx.data() + (t * joints + j) * C;
                             for (std::size_t c = 0; c < C; ++c) gxr[c] += gr[c] * inv;
                           }
                         }
                       }
                     });
}

Tensor temporal_conv(const Tensor& x, std::size_t frames, std::size_t joints,
                     const Tensor& weight, std::size_t kernel, std::size_t stride) {
  if (x.rank() != 2 || x.dim(0) != frames * joints) {
    throw ShapeError("temporal_conv: expected [" + std::to_string(frames) + "*" +
                     std::to_string(joints) + ", C], got " + shape_str(x.shape()));
  }
  if (kernel % 2 == 0 || stride == 0) {
    throw ParameterError("temporal_conv: kernel must be odd and stride positive");
  }
  const std::size_t C = x.dim(1);
  if (weight.rank() != 2 || weight.dim(0) != kernel * C) {
    throw ShapeError("temporal_conv: weight " + shape_str(weight.shape()) + " does not match " +
                     std::to_string(kernel) + " taps of " + std::to_string(C) + " channels");
  }
  const std::size_t O = weight.dim(1);
  const std::size_t out_frames = (frames + stride - 1) / stride;
  const auto half = static_cast<long>(kernel / 2);
  // src[t' * kernel + j]: input frame read by tap j of output frame t'.
  auto src = std::make_shared<std::vector<std::size_t>>(out_frames * kernel);
  for (std::size_t t = 0; t < out_frames; ++t) {
    for (std::size_t j = 0; j < kernel; ++j) {
      const long f = static_cast<long>(t * stride) + static_cast<long>(j) - half;
      (*src)[t * kernel + j] =
          static_cast<std::size_t>(std::clamp(f, 0L, static_cast<long>(frames) - 1));
    }
  }
  const double* xv = x.data().data();
  const double* w = weight.data().data();
  std::vector<double> out(out_frames * joints * O, 0.0);
  for (std::size_t t = 0; t < out_frames; ++t) {
    for (std::size_t j = 0; j < kernel; ++j) {
      const std::size_t f = (*src)[t * kernel + j];
      for (std::size_t v = 0; v < joints; ++v) {
        const double* xr = xv + (f * joints + v) * C;
        double* o = out.data() + (t * joints + v) * O;
        for (std::size_t c = 0; c < C; ++c) {
          const double a = xr[c];
          const double* wr = w + (j * C + c) * O;
          for (std::size_t k = 0; k < O; ++k) o[k] += a * wr[k];
        }
      }
    }
  }
  return make_result(
      {out_frames * joints, O}, std::move(out), {x, weight}, "temporal_conv",
      [src, out_frames, kernel, joints, C, O](const TensorImpl& o) {
        const double* g = o.grad.data();
        const double* xv = o.node->parents[0]->data->data();
        const double* w = o.node->parents[1]->data->data();
        auto gx = parent_grad(o, 0);
        auto gw = parent_grad(o, 1);
        for (std::size_t t = 0; t < out_frames; ++t) {
          for (std::size_t j = 0; j < kernel; ++j) {
            const std::size_t f = (*src)[t * kernel + j];
            for (std::size_t v = 0; v < joints; ++v) {
              const double* gr = g + (t * joints + v) * O;
              const std::size_t xrow = (f * joints + v) * C;
              for (std::size_t c = 0; c < C; ++c) {
                const std::size_t wrow = (j * C + c) * O;
                if (!gx.empty()) {
                  double acc = 0.0;
                  for (std::size_t k = 0; k < O; ++k) acc += gr[k] * w[wrow + k];
                  gx[xrow + c] += acc;
                }
                if (!gw.empty()) {
                  const double a = xv[xrow + c];
                  for (std::size_t k = 0; k < O; ++k) gw[wrow + k] += a * gr[k];
                }
              }
            }
          }
        }
      });
}

PoseNet::PoseNet(PoseNetConfig config, SkeletonSpec spec)
    : config_(std::move(config)), spec_(std::move(spec)) {
  spec_.validate();
  if (config_.gcn_channels == 0 || config_.tcn_channels == 0 || config_.d_visual == 0) {
    throw ParameterError("backbone widths must be positive");
  }
  if (config_.kernels.empty()) throw ParameterError("backbone needs at least one kernel size");
  for (std::size_t k : config_.kernels) {
    if (k % 2 == 0) throw ParameterError("temporal kernel sizes must be odd");
  }
  adjacency_ = spec_.normalized_adjacency();
  for (const auto& r : spec_.regions) region_joints_.push_back(r.joints);
}

void PoseNet::add_gcn(ParameterSet& params, const std::string& name, std::size_t in,
                      std::size_t out, std::uint64_t seed) const {
  params.add(name + ".refine", Tensor::zeros({in, V, V}, true));
  add_linear(params, name, in, out, seed);
}

void PoseNet::add_tcn(ParameterSet& params, const std::string& name, std::size_t channels,
                      std::uint64_t seed) const {
  for (std::size_t k : config_.kernels) {
    const std::string w = name + ".k" + std::to_string(k);
    params.add(w, init_xavier({k * channels, channels}, seed, w));
  }
  params.add(name + ".b", Tensor::zeros({channels}, true));
}

void PoseNet::init_params(ParameterSet& params, std::uint64_t seed) const {
  const std::size_t c1 = config_.gcn_channels, c2 = config_.tcn_channels;
  add_gcn(params, "backbone.gcn1", kPoseChannels, c1, seed);
  add_gcn(params, "backbone.gcn2", c1, c1, seed);
  add_tcn(params, "backbone.tcn1", c1, seed);
  add_gcn(params, "backbone.gcn3", c1, c2, seed);
  add_tcn(params, "backbone.tcn2", c2, seed);
  add_linear(params, "backbone.pool", spec_.regions.size() * c2, config_.d_visual, seed);
}

Tensor PoseNet::gcn_block(const ParameterSet& params, const std::string& name,
                          const Tensor& x) const {
  Tensor agg = graph_aggregate(x, adjacency_, params.get(name + ".refine"));
  return relu(linear(params, name, agg));
}

Tensor PoseNet::tcn_block(const ParameterSet& params, const std::string& name, const Tensor& x,
                          std::size_t frames) const {
  Tensor acc;
  for (std::size_t k : config_.kernels) {
    Tensor y = temporal_conv(x, frames, V, params.get(name + ".k" + std::to_string(k)), k, 2);
    acc = acc.defined() ? add(acc, y) : y;
  }
  return relu(add_rowwise(acc, params.get(name + ".b")));
}

Tensor PoseNet::region_pool(const ParameterSet& params, const Tensor& x,
                            std::size_t frames) const {
  if (x.rank() != 2 || x.dim(0) != frames * V) {
    throw ShapeError("region_pool: expected [" + std::to_string(frames) + "*76, C], got " +
                     shape_str(x.shape()));
  }
  return linear(params, "backbone.pool", region_mean(x, V, region_joints_));
}

Tensor PoseNet::forward(const ParameterSet& params, const PoseSequence& seq) const {
  seq.validate();
  Tensor x = pose_tensor(normalize_pose(seq, spec_));
  std::size_t frames = seq.num_frames;
  x = gcn_block(params, "backbone.gcn1", x);
  x = gcn_block(params, "backbone.gcn2", x);
  x = tcn_block(params, "backbone.tcn1", x, frames);
  frames = (frames + 1) / 2;
  x = gcn_block(params, "backbone.gcn3", x);
  x = tcn_block(params, "backbone.tcn2", x, frames);
  frames = (frames + 1) / 2;
  return region_pool(params, x, frames);
}

}  // namespace slt
