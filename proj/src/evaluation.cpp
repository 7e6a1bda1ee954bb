#include "activeloop/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "activeloop/common.hpp"
#include "activeloop/geometry.hpp"

namespace activeloop {

namespace {

double box_iou(const Box3D& a, const Box3D& b, IouKind kind) {
  return kind == IouKind::Bev ? bev_iou(a, b) : iou_3d(a, b);
}

}  // namespace

std::vector<bool> match_frame(const std::vector<Detection>& dets,
                              const std::vector<Box3D>& gts, const MatchConfig& cfg) {
  std::vector<bool> tp(dets.size(), false);
  std::vector<bool> gt_used(gts.size(), false);

  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&dets](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;  // stable: score ties keep index order
  });

  for (std::size_t oi : order) {
    const Detection& det = dets[oi];
    double best_iou = -1.0;
    int best_gt = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g] || gts[g].class_id != det.box.class_id) continue;
      double iou = box_iou(det.box, gts[g], cfg.iou_kind);
      if (iou >= cfg.iou_threshold && iou > best_iou) {
        best_iou = iou;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      gt_used[static_cast<std::size_t>(best_gt)] = true;
      tp[oi] = true;
    }
  }
  return tp;
}

double average_precision(std::vector<std::pair<double, bool>> scored_flags, long num_gt,
                         int recall_points) {
  if (num_gt < 1) throw DataError("average_precision: num_gt must be >= 1");
  std::stable_sort(scored_flags.begin(), scored_flags.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  // Precision/recall after each cumulative prefix.
  std::vector<double> precision, recall;
  long tp = 0, fp = 0;
  for (const auto& [score, is_tp] : scored_flags) {
    (void)score;
    if (is_tp) ++tp;
    else ++fp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
  }

  double ap = 0.0;
  for (int r = 1; r <= recall_points; ++r) {
    double target = static_cast<double>(r) / static_cast<double>(recall_points);
    double best = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= target) best = std::max(best, precision[i]);
    }
    ap += best;
  }
  return ap / static_cast<double>(recall_points);
}

EvalReport evaluate_detections(const std::vector<std::vector<Detection>>& dets_per_frame,
                               const std::vector<Frame>& frames, int num_classes,
                               const MatchConfig& cfg) {
  if (frames.empty()) throw DataError("evaluate: empty test set");
  EvalReport report;
  report.ap.assign(static_cast<std::size_t>(num_classes), 0.0);
  report.has_gt.assign(static_cast<std::size_t>(num_classes), false);
  report.tp.assign(static_cast<std::size_t>(num_classes), 0);
  report.fp.assign(static_cast<std::size_t>(num_classes), 0);
  report.fn.assign(static_cast<std::size_t>(num_classes), 0);

  std::vector<std::vector<std::pair<double, bool>>> pooled(
      static_cast<std::size_t>(num_classes));
  std::vector<long> num_gt(static_cast<std::size_t>(num_classes), 0);

  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& dets = dets_per_frame[f];
    std::vector<bool> tp = match_frame(dets, frames[f].gt_boxes, cfg);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      int cls = dets[i].box.class_id;
      if (cls < 0 || cls >= num_classes) continue;
      pooled[static_cast<std::size_t>(cls)].emplace_back(dets[i].score, tp[i]);
      if (tp[i]) ++report.tp[static_cast<std::size_t>(cls)];
      else ++report.fp[static_cast<std::size_t>(cls)];
    }
    for (const Box3D& gt : frames[f].gt_boxes) {
      if (gt.class_id >= 0 && gt.class_id < num_classes)
        ++num_gt[static_cast<std::size_t>(gt.class_id)];
    }
  }

  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < num_classes; ++c) {
    report.fn[static_cast<std::size_t>(c)] =
        num_gt[static_cast<std::size_t>(c)] - report.tp[static_cast<std::size_t>(c)];
    if (num_gt[static_cast<std::size_t>(c)] < 1) continue;  // excluded from mAP
    report.has_gt[static_cast<std::size_t>(c)] = true;
    report.ap[static_cast<std::size_t>(c)] = average_precision(
        pooled[static_cast<std::size_t>(c)], num_gt[static_cast<std::size_t>(c)],
        cfg.recall_points);
    sum += report.ap[static_cast<std::size_t>(c)];
    ++counted;
  }
  report.mAP = counted > 0 ? sum / counted : 0.0;
  return report;
}

EvalReport evaluate(const ModelState& model, const std::vector<Frame>& test_frames,
                    const MatchConfig& cfg, const ProposalParams& prop) {
  std::vector<std::vector<Detection>> dets(test_frames.size());
  parallel_for(test_frames.size(), [&](std::size_t i) {
    dets[i] = infer(model, test_frames[i], prop);
  });
  return evaluate_detections(dets, test_frames, model.num_classes, cfg);
}

}  // namespace activeloop
