#include "activeloop/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "activeloop/common.hpp"

namespace activeloop {

std::vector<double> zipf_weights(int num_classes, double s) {
  std::vector<double> w(static_cast<std::size_t>(num_classes));
  for (int k = 0; k < num_classes; ++k) {
    w[static_cast<std::size_t>(k)] = 1.0 / std::pow(static_cast<double>(k + 1), s);
  }
  return w;
}

SceneConfig default_scene_config(int num_classes, double zipf_s) {
  SceneConfig cfg;
  cfg.classes.clear();
  std::vector<double> w = zipf_weights(num_classes, zipf_s);
  for (int k = 0; k < num_classes; ++k) {
    ClassSpec spec;
    spec.name = "class" + std::to_string(k);
    // Sizes spread from compact to bus-like so the feature space separates
    // classes without making them trivially disjoint.
    double scale = 1.0 + 0.55 * k;
    spec.mean_dims = Eigen::Vector3d(2.0 * scale, 1.0 * scale, 1.2 + 0.25 * k);
    spec.weight = w[static_cast<std::size_t>(k)];
    cfg.classes.push_back(spec);
  }
  return cfg;
}

void validate(const SceneConfig& cfg) {
  if (cfg.num_classes() < 2) throw ConfigError("SceneConfig: need at least 2 classes");
  if (cfg.num_sequences < 1) throw ConfigError("SceneConfig: num_sequences must be >= 1");
  if (cfg.frames_per_sequence < 1)
    throw ConfigError("SceneConfig: frames_per_sequence must be >= 1");
  if (cfg.objects_min < 0 || cfg.objects_max < cfg.objects_min)
    throw ConfigError("SceneConfig: invalid objects_per_frame range");
  if (cfg.d0 <= 0.0) throw ConfigError("SceneConfig: d0 must be > 0");
  if (cfg.range_max <= 0.0) throw ConfigError("SceneConfig: range_max must be > 0");
  for (const ClassSpec& c : cfg.classes) {
    if (c.weight <= 0.0) throw ConfigError("SceneConfig: class weights must be > 0");
    if ((c.mean_dims.array() <= 0.0).any())
      throw ConfigError("SceneConfig: class mean dims must be > 0");
  }
}

namespace {

struct MovingObject {
  Box3D box;                 // pose at index_in_sequence 0
  Eigen::Vector2d velocity;  // meters per frame, BEV
};

int sample_categorical(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double r = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (r < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

Box3D box_at_frame(const MovingObject& obj, int frame_index) {
  Box3D b = obj.box;
  b.center.x() += obj.velocity.x() * frame_index;
  b.center.y() += obj.velocity.y() * frame_index;
  return b;
}

double truncated_normal(Rng& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::clamp(rng.normal(0.0, sigma), -3.0 * sigma, 3.0 * sigma);
}

// Sample a point on the 4 side faces or the top (bottom is never hit by
// an elevated sensor at desk fidelity), weighted by face area.
Point sample_surface_point(Rng& rng, const Box3D& box) {
  double l = box.dims.x(), w = box.dims.y(), h = box.dims.z();
  double a_lh = l * h, a_wh = w * h, a_top = l * w;
  double faces[5] = {a_lh, a_lh, a_wh, a_wh, a_top};
  double total = 2.0 * a_lh + 2.0 * a_wh + a_top;
  double r = rng.uniform() * total;
  int face = 4;
  double acc = 0.0;
  for (int i = 0; i < 5; ++i) {
    acc += faces[i];
    if (r < acc) {
      face = i;
      break;
    }
  }
  double u = 0.0, v = 0.0, z = 0.0;
  switch (face) {
    case 0:  // +y side
      u = rng.uniform(-0.5 * l, 0.5 * l); v = 0.5 * w; z = rng.uniform(-0.5 * h, 0.5 * h);
      break;
    case 1:  // -y side
      u = rng.uniform(-0.5 * l, 0.5 * l); v = -0.5 * w; z = rng.uniform(-0.5 * h, 0.5 * h);
      break;
    case 2:  // +x side
      u = 0.5 * l; v = rng.uniform(-0.5 * w, 0.5 * w); z = rng.uniform(-0.5 * h, 0.5 * h);
      break;
    case 3:  // -x side
      u = -0.5 * l; v = rng.uniform(-0.5 * w, 0.5 * w); z = rng.uniform(-0.5 * h, 0.5 * h);
      break;
    default:  // top
      u = rng.uniform(-0.5 * l, 0.5 * l); v = rng.uniform(-0.5 * w, 0.5 * w); z = 0.5 * h;
      break;
  }
  double c = std::cos(box.yaw), s = std::sin(box.yaw);
  Point p;
  p.x = c * u - s * v + box.center.x();
  p.y = s * u + c * v + box.center.y();
  p.z = z + box.center.z();
  return p;
}

}  // namespace

std::vector<Frame> generate_dataset(const SceneConfig& cfg) {
  validate(cfg);
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(cfg.num_sequences * cfg.frames_per_sequence));

  std::vector<double> weights;
  for (const ClassSpec& c : cfg.classes) weights.push_back(c.weight);

  for (int seq = 0; seq < cfg.num_sequences; ++seq) {
    Rng rng(hash_combine(cfg.seed, hash_string("sequence"), static_cast<std::uint64_t>(seq)));

    int num_objects = rng.uniform_int(cfg.objects_min, cfg.objects_max);
    std::vector<MovingObject> objects;
    for (int o = 0; o < num_objects; ++o) {
      int cls = sample_categorical(rng, weights);
      const ClassSpec& spec = cfg.classes[static_cast<std::size_t>(cls)];
      Box3D box;
      for (int i = 0; i < 3; ++i) {
        double jitter = 1.0 + cfg.dims_jitter * truncated_normal(rng, 1.0) / 3.0;
        box.dims[i] = std::max(0.2, spec.mean_dims[i] * jitter);
      }
      box.class_id = cls;
      box.center.z() = 0.5 * box.dims.z();

      bool placed = false;
      int last = cfg.frames_per_sequence - 1;
      for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
        double r = cfg.range_max * std::sqrt(rng.uniform());
        double ang = rng.uniform(-M_PI, M_PI);
        box.center.x() = r * std::cos(ang);
        box.center.y() = r * std::sin(ang);
        box.yaw = normalize_yaw(rng.uniform(-M_PI, M_PI));
        double vang = rng.uniform(-M_PI, M_PI);
        double speed = rng.uniform(0.0, cfg.speed_max);
        MovingObject cand{box, {speed * std::cos(vang), speed * std::sin(vang)}};

        Box3D end_box = box_at_frame(cand, last);
        if (box_distance(end_box) > cfg.range_max) continue;
        bool overlap = false;
        for (const MovingObject& other : objects) {
          if (bev_intersection_area(cand.box, other.box) > 0.0 ||
              bev_intersection_area(end_box, box_at_frame(other, last)) > 0.0) {
            overlap = true;
            break;
          }
        }
        if (!overlap) {
          objects.push_back(cand);
          placed = true;
        }
      }
      // Unplaceable objects are skipped, never an error.
    }

    for (int f = 0; f < cfg.frames_per_sequence; ++f) {
      Frame frame;
      frame.sequence_id = seq;
      frame.index_in_sequence = f;
      frame.frame_id = seq * cfg.frames_per_sequence + f;

      for (const MovingObject& obj : objects) {
        Box3D box = box_at_frame(obj, f);
        frame.gt_boxes.push_back(box);

        double d = std::max(box_distance(box), cfg.d0);
        double expected = cfg.density_n0 * (cfg.d0 / d) * (cfg.d0 / d);
        int count = rng.poisson(expected);
        for (int i = 0; i < count; ++i) {
          Point p = sample_surface_point(rng, box);
          p.x += truncated_normal(rng, cfg.noise_sigma);
          p.y += truncated_normal(rng, cfg.noise_sigma);
          p.z += truncated_normal(rng, cfg.noise_sigma);
          p.reflectance = rng.uniform();
          frame.cloud.points.push_back(p);
        }
      }

      for (int i = 0; i < cfg.clutter_points; ++i) {
        double r = cfg.range_max * std::sqrt(rng.uniform());
        double ang = rng.uniform(-M_PI, M_PI);
        Point p;
        p.x = r * std::cos(ang);
        p.y = r * std::sin(ang);
        p.z = rng.uniform(0.0, 0.1);  // ground-level returns
        p.reflectance = rng.uniform();
        frame.cloud.points.push_back(p);
      }

      frames.push_back(std::move(frame));
    }
  }
  return frames;
}

std::vector<long> class_histogram(const std::vector<Frame>& frames, int num_classes) {
  std::vector<long> hist(static_cast<std::size_t>(num_classes), 0);
  for (const Frame& f : frames) {
    for (const Box3D& b : f.gt_boxes) {
      if (b.class_id >= 0 && b.class_id < num_classes)
        ++hist[static_cast<std::size_t>(b.class_id)];
    }
  }
  return hist;
}

}  // namespace activeloop
