#pragma once

// Skeleton visual backbone: spatial graph convolution over the keypoint graph,
// strided multi-scale temporal convolution and per-region pooling.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "slt/nn.hpp"
#include "slt/tensor.hpp"

namespace slt {

inline constexpr std::size_t kNumKeypoints = 76;
inline constexpr std::size_t kPoseChannels = 3;  // x, y, confidence

struct PoseSequence {
  std::string sample_id;
  std::size_t num_frames = 0;
  std::vector<double> frames;  // num_frames x 76 x 3, row-major

  double at(std::size_t t, std::size_t v, std::size_t c) const {
    return frames[(t * kNumKeypoints + v) * kPoseChannels + c];
  }
  // Throws ShapeError on a size mismatch or zero frames, ParameterError on a
  // confidence outside [0, 1] or a non-finite coordinate.
  void validate() const;
};

struct SkeletonRegion {
  std::string name;
  std::vector<std::size_t> joints;
};

struct SkeletonSpec {
  std::vector<SkeletonRegion> regions;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  // Keypoints whose distance sets the per-frame scale.
  std::pair<std::size_t, std::size_t> shoulders{2, 5};
  // Region whose centroid is the per-frame origin.
  std::size_t center_region = 0;

  // body 0-8 (upper-body joints: nose, neck, right shoulder/elbow/wrist, left
  // shoulder/elbow/wrist, mid-hip), face 9-33 (contour chain), left hand
  // 34-54 and right hand 55-75 (21-point hand model, wrist first).
  static SkeletonSpec default_spec();
  // JSON {"regions": {name: [indices]}, "edges": [[i, j], ...],
  //       optional "shoulders": [i, j], optional "center": name}.
  static SkeletonSpec load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  // Regions must be disjoint and cover 0..75; edges must be in range.
  void validate() const;

  // D^-1/2 (A + I) D^-1/2, 76 x 76 row-major.
  std::vector<double> normalized_adjacency() const;
};

// Centers x, y on the center-region centroid and divides by the shoulder
// distance (max with eps); confidence is copied.
PoseSequence normalize_pose(const PoseSequence& seq, const SkeletonSpec& spec,
                            double eps = 1e-6);

// Pose frames as a [T * 76, 3] tensor without normalization.
Tensor pose_tensor(const PoseSequence& seq);

// out[t, v, c] = sum_u (A[v, u] + R[c, v, u]) x[t, u, c]
// x: [T * V, C], adjacency: V x V constant, refine: [C, V, V] -> [T * V, C].
Tensor graph_aggregate(const Tensor& x, const std::vector<double>& adjacency,
                       const Tensor& refine);

// [T * V, C] -> [T, R * C]: mean over each region's joints, regions in order.
Tensor region_mean(const Tensor& x, std::size_t joints,
                   const std::vector<std::vector<std::size_t>>& regions);

// Strided temporal convolution over [T * V, C] rows, T' = ceil(T / 2). Window
// taps are centered on 2t' with out-of-range frames replaced by the nearest
// edge frame. weight: [k * C, C'], taps stacked along the first axis.
Tensor temporal_conv(const Tensor& x, std::size_t frames, std::size_t joints,
                     const Tensor& weight, std::size_t kernel, std::size_t stride = 2);

struct PoseNetConfig {
  std::size_t gcn_channels = 64;
  std::size_t tcn_channels = 128;
  std::size_t d_visual = 1024;
  std::vector<std::size_t> kernels{3, 5};
};

class PoseNet {
 public:
  PoseNet(PoseNetConfig config, SkeletonSpec spec);

  // Registers "backbone.*" parameters.
  void init_params(ParameterSet& params, std::uint64_t seed) const;

  // Graph block on [T * 76, C]: relu(graph_aggregate(x) W + b).
  Tensor gcn_block(const ParameterSet& params, const std::string& name, const Tensor& x) const;
  // Sum of strided temporal convolutions at every kernel size, + b, relu.
  Tensor tcn_block(const ParameterSet& params, const std::string& name, const Tensor& x,
                   std::size_t frames) const;
  // [T * 76, C] -> [T, d_visual] via region means and a linear projection.
  Tensor region_pool(const ParameterSet& params, const Tensor& x, std::size_t frames) const;

  // normalize -> gcn x2 -> tcn -> gcn -> tcn -> pool, giving [ceil(T/4), d_visual].
  Tensor forward(const ParameterSet& params, const PoseSequence& seq) const;

  static std::size_t output_length(std::size_t frames) { return (frames + 3) / 4; }

  const PoseNetConfig& config() const { return config_; }
  const SkeletonSpec& skeleton() const { return spec_; }

 private:
  void add_gcn(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
               std::uint64_t seed) const;
  void add_tcn(ParameterSet& params, const std::string& name, std::size_t channels,
               std::uint64_t seed) const;

  PoseNetConfig config_;
  SkeletonSpec spec_;
  std::vector<double> adjacency_;
  std::vector<std::vector<std::size_t>> region_joints_;
};

}  // namespace slt
