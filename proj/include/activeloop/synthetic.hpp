#ifndef ACTIVELOOP_SYNTHETIC_HPP
#define ACTIVELOOP_SYNTHETIC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "activeloop/geometry.hpp"

namespace activeloop {

struct ClassSpec {
  std::string name;
  Eigen::Vector3d mean_dims = Eigen::Vector3d(4.0, 2.0, 1.6);  // (l, w, h)
  double weight = 1.0;  // frequency weight, > 0
};

struct SceneConfig {
  int num_sequences = 4;
  int frames_per_sequence = 10;
  std::vector<ClassSpec> classes;  // C >= 2 entries
  int objects_min = 2;
  int objects_max = 6;
  double range_max = 50.0;     // BEV placement radius, meters
  double density_n0 = 200.0;   // expected points at reference distance d0
  double d0 = 10.0;
  double noise_sigma = 0.03;   // per-coordinate point jitter, truncated at 3 sigma
  double dims_jitter = 0.1;    // relative per-object size variation
  double speed_max = 1.5;      // meters per frame
  int clutter_points = 100;    // ground-level background points per frame
  std::uint64_t seed = 1;

  int num_classes() const { return static_cast<int>(classes.size()); }
};

// Zipf(s) frequency weights over C classes: w_k = 1 / (k+1)^s.
std::vector<double> zipf_weights(int num_classes, double s);

// Classes named "class0..classN" with Zipf-skewed weights and spread-out
// mean dimensions; the default scenario for desk-scale experiments.
SceneConfig default_scene_config(int num_classes, double zipf_s = 1.0);

struct Frame {
  int frame_id = 0;  // unique dataset-wide
  int sequence_id = 0;
  int index_in_sequence = 0;
  PointCloud cloud;
  std::vector<Box3D> gt_boxes;
};

void validate(const SceneConfig& cfg);  // throws ConfigError

// Deterministic in (cfg, cfg.seed); per-sequence substreams make the
// result independent of generation order.
std::vector<Frame> generate_dataset(const SceneConfig& cfg);

// Counts of ground-truth class labels, length num_classes.
std::vector<long> class_histogram(const std::vector<Frame>& frames, int num_classes);

}  // namespace activeloop

#endif  // ACTIVELOOP_SYNTHETIC_HPP
