#include "activeloop/surrogate.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

#include "activeloop/common.hpp"

namespace activeloop {

namespace {

Eigen::VectorXd stable_softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd z = logits.array() - logits.maxCoeff();
  Eigen::VectorXd e = z.array().exp();
  return e / e.sum();
}

Eigen::VectorXd augment(const Eigen::VectorXd& x) {
  Eigen::VectorXd a(x.size() + 1);
  a.head(x.size()) = x;
  a(x.size()) = 1.0;
  return a;
}

Detection detection_from_probs(const ModelState& model, const Candidate& cand,
                               const Eigen::VectorXd& feature_std,
                               const Eigen::VectorXd& probs) {
  const int C = model.num_classes;
  Detection det;
  det.box = cand.box;
  det.probs = probs;
  det.objectness = 1.0 - probs(C);
  int best_fg = 0;
  probs.head(C).maxCoeff(&best_fg);
  det.box.class_id = best_fg;
  det.score = det.objectness * probs(best_fg);
  det.feature = feature_std;
  det.point_count = cand.point_count;
  det.distance = box_distance(cand.box);

  // BADGE-style gradient of the cross-entropy at the pseudo-label
  // (argmax over all C+1 outputs) w.r.t. the final-layer weights.
  int pseudo = 0;
  probs.maxCoeff(&pseudo);
  Eigen::VectorXd aug = augment(feature_std);
  const int A = static_cast<int>(aug.size());
  det.grad_embedding.resize((C + 1) * A);
  for (int k = 0; k <= C; ++k) {
    double coeff = probs(k) - (k == pseudo ? 1.0 : 0.0);
    det.grad_embedding.segment(k * A, A) = coeff * aug;
  }
  return det;
}

Eigen::VectorXd standardize(const ModelState& model,
                            const Eigen::Matrix<double, kFeatureDim, 1>& f) {
  return (f - model.feature_mean).cwiseQuotient(model.feature_std);
}

}  // namespace

std::vector<Candidate> propose(const Frame& frame, const ProposalParams& params) {
  std::vector<const Point*> elevated;
  for (const Point& p : frame.cloud.points) {
    if (p.z > params.ground_z) elevated.push_back(&p);
  }
  if (elevated.empty()) return {};

  // Sparse BEV occupancy grid keyed by cell coordinates.
  std::map<std::pair<long, long>, std::vector<int>> grid;
  for (int i = 0; i < static_cast<int>(elevated.size()); ++i) {
    long ix = static_cast<long>(std::floor(elevated[static_cast<std::size_t>(i)]->x / params.grid_cell));
    long iy = static_cast<long>(std::floor(elevated[static_cast<std::size_t>(i)]->y / params.grid_cell));
    grid[{ix, iy}].push_back(i);
  }

  std::map<std::pair<long, long>, int> component;
  std::vector<std::vector<int>> clusters;
  for (const auto& [cell, pts] : grid) {
    if (component.count(cell)) continue;
    int id = static_cast<int>(clusters.size());
    clusters.emplace_back();
    std::queue<std::pair<long, long>> frontier;
    frontier.push(cell);
    component[cell] = id;
    while (!frontier.empty()) {
      auto [cx, cy] = frontier.front();
      frontier.pop();
      auto it = grid.find({cx, cy});
      for (int pi : it->second) clusters[static_cast<std::size_t>(id)].push_back(pi);
      for (long dx = -1; dx <= 1; ++dx) {
        for (long dy = -1; dy <= 1; ++dy) {
          if (dx == 0 && dy == 0) continue;
          std::pair<long, long> nb{cx + dx, cy + dy};
          if (grid.count(nb) && !component.count(nb)) {
            component[nb] = id;
            frontier.push(nb);
          }
        }
      }
    }
  }

  std::vector<Candidate> candidates;
  for (const std::vector<int>& cluster : clusters) {
    if (static_cast<int>(cluster.size()) < params.min_cluster_points) continue;
    const int n = static_cast<int>(cluster.size());

    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    double zmin = 1e300, zmax = -1e300, zsum = 0.0, rsum = 0.0;
    for (int pi : cluster) {
      const Point& p = *elevated[static_cast<std::size_t>(pi)];
      centroid += Eigen::Vector2d(p.x, p.y);
      zmin = std::min(zmin, p.z);
      zmax = std::max(zmax, p.z);
      zsum += p.z;
      rsum += p.reflectance;
    }
    centroid /= n;

    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (int pi : cluster) {
      const Point& p = *elevated[static_cast<std::size_t>(pi)];
      Eigen::Vector2d d(p.x - centroid.x(), p.y - centroid.y());
      cov += d * d.transpose();
    }
    cov /= n;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    Eigen::Vector2d axis = es.eigenvectors().col(1);  // largest eigenvalue
    double yaw = normalize_yaw(std::atan2(axis.y(), axis.x()));

    double c = std::cos(-yaw), s = std::sin(-yaw);
    double su2 = 0.0, sv2 = 0.0;
    for (int pi : cluster) {
      const Point& p = *elevated[static_cast<std::size_t>(pi)];
      double dx = p.x - centroid.x(), dy = p.y - centroid.y();
      double u = c * dx - s * dy;
      double v = s * dx + c * dy;
      su2 += u * u;
      sv2 += v * v;
    }
    double ext_l = std::clamp(2.5 * std::sqrt(su2 / n), 0.3, 20.0);
    double ext_w = std::clamp(2.5 * std::sqrt(sv2 / n), 0.3, 20.0);
    double ext_h = std::max(zmax - zmin, 0.1);

    Candidate cand;
    cand.box.center = Eigen::Vector3d(centroid.x(), centroid.y(), 0.5 * (zmin + zmax));
    cand.box.dims = Eigen::Vector3d(ext_l, ext_w, ext_h);
    cand.box.yaw = yaw;
    cand.box.class_id = -1;
    cand.point_count = n;
    cand.feature << std::log1p(static_cast<double>(n)), ext_l, ext_w, ext_h, zsum / n,
        rsum / n, centroid.norm(), ext_l * ext_w;
    candidates.push_back(std::move(cand));
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.point_count > b.point_count;
                   });
  if (static_cast<int>(candidates.size()) > params.max_candidates)
    candidates.resize(static_cast<std::size_t>(params.max_candidates));
  return candidates;
}

ModelState make_model(int num_classes, std::uint64_t rng_stream_id) {
  ModelState m;
  m.num_classes = num_classes;
  m.weights = Eigen::MatrixXd::Zero(num_classes + 1, kFeatureDim + 1);
  m.feature_mean = Eigen::VectorXd::Zero(kFeatureDim);
  m.feature_std = Eigen::VectorXd::Ones(kFeatureDim);
  m.rng_stream_id = rng_stream_id;
  return m;
}

TrainSet build_train_set(const std::vector<Frame>& labeled, int num_classes,
                         const ProposalParams& prop, double match_iou) {
  std::vector<Eigen::Matrix<double, kFeatureDim, 1>> feats;
  std::vector<int> labels;
  for (const Frame& frame : labeled) {
    for (const Candidate& cand : propose(frame, prop)) {
      double best_iou = 0.0;
      int best_class = num_classes;  // background
      for (const Box3D& gt : frame.gt_boxes) {
        double iou = bev_iou(cand.box, gt);
        if (iou > best_iou) {
          best_iou = iou;
          best_class = gt.class_id;
        }
      }
      if (best_iou < match_iou) best_class = num_classes;
      feats.push_back(cand.feature);
      labels.push_back(best_class);
    }
  }
  TrainSet set;
  set.features.resize(static_cast<Eigen::Index>(feats.size()), kFeatureDim);
  for (std::size_t i = 0; i < feats.size(); ++i)
    set.features.row(static_cast<Eigen::Index>(i)) = feats[i].transpose();
  set.labels = std::move(labels);
  return set;
}

double softmax_loss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features_std,
                    const std::vector<int>& labels, double l2, Eigen::MatrixXd* grad) {
  const Eigen::Index n = features_std.rows();
  const Eigen::Index f = features_std.cols();
  double loss = 0.0;
  if (grad) *grad = Eigen::MatrixXd::Zero(weights.rows(), weights.cols());
  Eigen::VectorXd aug(f + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    aug.head(f) = features_std.row(i).transpose();
    aug(f) = 1.0;
    Eigen::VectorXd probs = stable_softmax(weights * aug);
    double p = std::max(probs(labels[static_cast<std::size_t>(i)]), 1e-300);
    loss -= std::log(p);
    if (grad) {
      probs(labels[static_cast<std::size_t>(i)]) -= 1.0;
      grad->noalias() += probs * aug.transpose();
    }
  }
  loss /= static_cast<double>(n);
  loss += 0.5 * l2 * weights.squaredNorm();
  if (grad) {
    *grad /= static_cast<double>(n);
    *grad += l2 * weights;
  }
  return loss;
}

double training_loss(const ModelState& model, const TrainSet& set, double l2) {
  Eigen::MatrixXd std_feats = set.features;
  for (Eigen::Index i = 0; i < std_feats.rows(); ++i) {
    std_feats.row(i) = (std_feats.row(i).transpose() - model.feature_mean)
                           .cwiseQuotient(model.feature_std)
                           .transpose();
  }
  return softmax_loss(model.weights, std_feats, set.labels, l2);
}

void train(ModelState& model, const std::vector<Frame>& labeled,
           const TrainParams& params, const ProposalParams& prop) {
  if (labeled.empty()) throw DataError("train: labeled pool is empty");
  TrainSet set = build_train_set(labeled, model.num_classes, prop, params.match_iou);
  const std::size_t n = set.size();
  if (n == 0) throw DataError("train: labeled pool produced zero candidates");

  if (!params.resume) {
    model.feature_mean = set.features.colwise().mean().transpose();
    Eigen::MatrixXd centered = set.features.rowwise() - model.feature_mean.transpose();
    model.feature_std = (centered.array().square().colwise().mean().sqrt() + 1e-9)
                            .matrix()
                            .transpose();
    model.feature_std = model.feature_std.cwiseMax(1e-6);
    model.weights.setZero();
  }

  Eigen::MatrixXd std_feats(set.features.rows(), set.features.cols());
  for (Eigen::Index i = 0; i < std_feats.rows(); ++i) {
    std_feats.row(i) = (set.features.row(i).transpose() - model.feature_mean)
                           .cwiseQuotient(model.feature_std)
                           .transpose();
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  double lr = params.lr;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    Rng rng(hash_combine(model.rng_stream_id, hash_string("shuffle"),
                         static_cast<std::uint64_t>(model.train_steps),
                         static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(params.batch_size)) {
      std::size_t stop = std::min(n, start + static_cast<std::size_t>(params.batch_size));
      Eigen::MatrixXd bx(static_cast<Eigen::Index>(stop - start), std_feats.cols());
      std::vector<int> by(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        bx.row(static_cast<Eigen::Index>(i - start)) =
            std_feats.row(static_cast<Eigen::Index>(order[i]));
        by[i - start] = set.labels[order[i]];
      }
      Eigen::MatrixXd grad;
      softmax_loss(model.weights, bx, by, params.l2, &grad);
      model.weights.noalias() -= lr * grad;
    }
    lr *= params.lr_decay;
  }
  model.train_steps += static_cast<long>(params.epochs) * static_cast<long>(n);
}

Detection classify(const ModelState& model, const Candidate& cand) {
  Eigen::VectorXd xs = standardize(model, cand.feature);
  Eigen::VectorXd probs = stable_softmax(model.weights * augment(xs));
  return detection_from_probs(model, cand, xs, probs);
}

std::vector<Detection> infer_candidates(const ModelState& model,
                                        const std::vector<Candidate>& candidates) {
  std::vector<Detection> dets;
  dets.reserve(candidates.size());
  for (const Candidate& c : candidates) dets.push_back(classify(model, c));
  return dets;
}

std::vector<Detection> infer(const ModelState& model, const Frame& frame,
                             const ProposalParams& prop) {
  return infer_candidates(model, propose(frame, prop));
}

std::vector<StochasticDetection> infer_stochastic_candidates(
    const ModelState& model, const std::vector<Candidate>& candidates, int frame_id,
    int passes, double drop_rate) {
  std::vector<StochasticDetection> out;
  out.reserve(candidates.size());
  for (const Candidate& c : candidates) {
    StochasticDetection sd;
    sd.detection = classify(model, c);
    sd.pass_probs.resize(static_cast<std::size_t>(passes));
    out.push_back(std::move(sd));
  }
  double keep = 1.0 - drop_rate;
  for (int pass = 0; pass < passes; ++pass) {
    Rng rng(hash_combine(model.rng_stream_id, hash_string("mc"),
                         static_cast<std::uint64_t>(frame_id),
                         static_cast<std::uint64_t>(pass)));
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      Eigen::VectorXd xs = standardize(model, candidates[i].feature);
      if (drop_rate > 0.0) {
        for (Eigen::Index j = 0; j < xs.size(); ++j) {
          xs(j) = (rng.uniform() < drop_rate) ? 0.0 : xs(j) / keep;
        }
      }
      out[i].pass_probs[static_cast<std::size_t>(pass)] =
          stable_softmax(model.weights * augment(xs));
    }
  }
  return out;
}

std::vector<StochasticDetection> infer_stochastic(const ModelState& model,
                                                  const Frame& frame, int passes,
                                                  double drop_rate,
                                                  const ProposalParams& prop) {
  return infer_stochastic_candidates(model, propose(frame, prop), frame.frame_id, passes,
                                     drop_rate);
}

}  // namespace activeloop
