#ifndef ACTIVELOOP_SURROGATE_HPP
#define ACTIVELOOP_SURROGATE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "activeloop/synthetic.hpp"

namespace activeloop {

// Handcrafted candidate feature layout (F = 8):
//   [ log(1+points), l, w, h, mean z, mean reflectance, BEV distance, footprint area ]
inline constexpr int kFeatureDim = 8;

struct Candidate {
  Box3D box;  // class_id unset (-1) at proposal time
  Eigen::Matrix<double, kFeatureDim, 1> feature;  // raw, standardized inside the model
  int point_count = 0;
};

struct Detection {
  Box3D box;                       // class_id = argmax over foreground classes
  Eigen::VectorXd probs;           // length C+1, last entry = background
  double objectness = 0.0;         // 1 - probs[background]
  double score = 0.0;              // objectness * max foreground prob
  Eigen::VectorXd grad_embedding;  // (probs - onehot(argmax)) ⊗ [feature; 1]
  Eigen::VectorXd feature;         // standardized feature, length F
  int point_count = 0;
  double distance = 0.0;           // BEV range of the box center
};

struct ProposalParams {
  double grid_cell = 0.5;       // meters
  int min_cluster_points = 5;
  double ground_z = 0.2;        // points at or below are dropped
  int max_candidates = 64;      // kept largest-first
};

// BEV occupancy clustering (8-connected components) + PCA box fit.
std::vector<Candidate> propose(const Frame& frame, const ProposalParams& params = {});

struct ModelState {
  int num_classes = 0;        // foreground classes C; the model has C+1 outputs
  Eigen::MatrixXd weights;    // (C+1) x (F+1), last column = bias
  Eigen::VectorXd feature_mean;  // length F
  Eigen::VectorXd feature_std;   // length F, > 0 componentwise
  long train_steps = 0;          // cumulative candidate visits
  std::uint64_t rng_stream_id = 0;

  bool trained() const { return weights.size() > 0; }
};

ModelState make_model(int num_classes, std::uint64_t rng_stream_id);

struct TrainParams {
  int epochs = 50;
  double lr = 0.01;
  int batch_size = 32;
  double lr_decay = 0.95;   // multiplicative, per epoch
  double l2 = 1e-4;
  double match_iou = 0.3;   // candidate-to-GT BEV IoU for a foreground label
  bool resume = false;      // keep weights and frozen standardization stats
};

// Candidate features plus matched labels (C = background) for a labeled pool.
struct TrainSet {
  Eigen::MatrixXd features;   // N x F, raw
  std::vector<int> labels;    // in [0, C]
  std::size_t size() const { return labels.size(); }
};

TrainSet build_train_set(const std::vector<Frame>& labeled, int num_classes,
                         const ProposalParams& prop = {}, double match_iou = 0.3);

// Mini-batch gradient descent on the softmax-linear objective.
// Throws DataError if the labeled pool yields zero candidates.
void train(ModelState& model, const std::vector<Frame>& labeled,
           const TrainParams& params = {}, const ProposalParams& prop = {});

// Mean cross-entropy + (l2/2)·||W||² over standardized features.
// Returns the loss; if grad != nullptr also writes d(loss)/d(weights).
double softmax_loss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features_std,
                    const std::vector<int>& labels, double l2,
                    Eigen::MatrixXd* grad = nullptr);

// Full-dataset loss under the model's standardization (test/diagnostic hook).
double training_loss(const ModelState& model, const TrainSet& set, double l2 = 1e-4);

Detection classify(const ModelState& model, const Candidate& cand);

std::vector<Detection> infer(const ModelState& model, const Frame& frame,
                             const ProposalParams& prop = {});
std::vector<Detection> infer_candidates(const ModelState& model,
                                        const std::vector<Candidate>& candidates);

struct StochasticDetection {
  Detection detection;                    // deterministic (no-dropout) pass
  std::vector<Eigen::VectorXd> pass_probs;  // one prob vector per pass
};

// Feature dropout at inference time; pass streams are derived from
// (rng_stream_id, frame_id, pass) so results are order-independent.
std::vector<StochasticDetection> infer_stochastic(const ModelState& model,
                                                  const Frame& frame, int passes = 10,
                                                  double drop_rate = 0.3,
                                                  const ProposalParams& prop = {});
std::vector<StochasticDetection> infer_stochastic_candidates(
    const ModelState& model, const std::vector<Candidate>& candidates, int frame_id,
    int passes = 10, double drop_rate = 0.3);

}  // namespace activeloop

#endif  // ACTIVELOOP_SURROGATE_HPP
