#ifndef ACTIVELOOP_EVALUATION_HPP
#define ACTIVELOOP_EVALUATION_HPP

#include <vector>

#include "activeloop/surrogate.hpp"

namespace activeloop {

enum class IouKind { Bev, Iou3d };

struct MatchConfig {
  IouKind iou_kind = IouKind::Bev;
  double iou_threshold = 0.5;  // same threshold for every class
  int recall_points = 40;      // KITTI-style R40 interpolation
};

// Per-detection TP flags for one frame. Matching is per class, greedy in
// score order (ties by smaller detection index), each detection taking the
// unmatched GT of highest IoU >= threshold.
std::vector<bool> match_frame(const std::vector<Detection>& dets,
                              const std::vector<Box3D>& gts, const MatchConfig& cfg);

// AP over the score-descending pooled detections of one class.
// scored_flags: (score, is_tp) pairs; num_gt >= 1.
double average_precision(std::vector<std::pair<double, bool>> scored_flags, long num_gt,
                         int recall_points = 40);

struct EvalReport {
  std::vector<double> ap;     // per class; 0 for classes without GT
  std::vector<bool> has_gt;   // classes with >= 1 GT instance enter the mAP mean
  std::vector<long> tp, fp, fn;
  double mAP = 0.0;
};

// Metric core over precomputed per-frame detections (also serves external
// detector outputs and oracle-injection tests).
EvalReport evaluate_detections(const std::vector<std::vector<Detection>>& dets_per_frame,
                               const std::vector<Frame>& frames, int num_classes,
                               const MatchConfig& cfg = {});

// Runs the surrogate on every test frame. Throws DataError on an empty set.
EvalReport evaluate(const ModelState& model, const std::vector<Frame>& test_frames,
                    const MatchConfig& cfg = {}, const ProposalParams& prop = {});

}  // namespace activeloop

#endif  // ACTIVELOOP_EVALUATION_HPP
