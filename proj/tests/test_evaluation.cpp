#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "activeloop/alloop.hpp"
#include "activeloop/common.hpp"
#include "activeloop/evaluation.hpp"

using namespace activeloop;

namespace {

Box3D box_at(double x, double y, int cls, double l = 2.0, double w = 2.0) {
  Box3D b;
  b.center = Eigen::Vector3d(x, y, 0.5);
  b.dims = Eigen::Vector3d(l, w, 1.0);
  b.class_id = cls;
  return b;
}

Detection det_at(double x, double y, int cls, double score, double l = 2.0,
                 double w = 2.0) {
  Detection d;
  d.box = box_at(x, y, cls, l, w);
  d.score = score;
  return d;
}

// Independent R40 AP reference, written against the definition rather than
// the production code path.
double reference_ap(std::vector<std::pair<double, bool>> flags, long num_gt) {
  std::stable_sort(flags.begin(), flags.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  double ap = 0.0;
  for (int r = 1; r <= 40; ++r) {
    double target = static_cast<double>(r) / 40.0;
    double best = 0.0;
    long tp = 0, seen = 0;
    for (const auto& [score, is_tp] : flags) {
      (void)score;
      ++seen;
      if (is_tp) ++tp;
      double recall = static_cast<double>(tp) / static_cast<double>(num_gt);
      double precision = static_cast<double>(tp) / static_cast<double>(seen);
      if (recall >= target) best = std::max(best, precision);
    }
    ap += best;
  }
  return ap / 40.0;
}

// Full pipeline reference: per-frame greedy matching, per-class pooling, R40.
double reference_map(const std::vector<std::vector<Detection>>& dets_per_frame,
                     const std::vector<Frame>& frames, int num_classes,
                     double threshold) {
  std::vector<std::vector<std::pair<double, bool>>> pooled(
      static_cast<std::size_t>(num_classes));
  std::vector<long> num_gt(static_cast<std::size_t>(num_classes), 0);

  for (std::size_t f = 0; f < frames.size(); ++f) {
    std::vector<Detection> dets = dets_per_frame[f];
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    std::vector<bool> used(frames[f].gt_boxes.size(), false);
    for (const Detection& d : dets) {
      double best = -1.0;
      int pick = -1;
      for (std::size_t g = 0; g < frames[f].gt_boxes.size(); ++g) {
        const Box3D& gt = frames[f].gt_boxes[g];
        if (used[g] || gt.class_id != d.box.class_id) continue;
        double iou = bev_iou(d.box, gt);
        if (iou >= threshold && iou > best) {
          best = iou;
          pick = static_cast<int>(g);
        }
      }
      bool tp = pick >= 0;
      if (tp) used[static_cast<std::size_t>(pick)] = true;
      if (d.box.class_id >= 0 && d.box.class_id < num_classes)
        pooled[static_cast<std::size_t>(d.box.class_id)].emplace_back(d.score, tp);
    }
    for (const Box3D& gt : frames[f].gt_boxes)
      if (gt.class_id >= 0 && gt.class_id < num_classes)
        ++num_gt[static_cast<std::size_t>(gt.class_id)];
  }
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (num_gt[static_cast<std::size_t>(c)] < 1) continue;
    sum += reference_ap(pooled[static_cast<std::size_t>(c)],
                        num_gt[static_cast<std::size_t>(c)]);
    ++counted;
  }
  return counted > 0 ? sum / counted : 0.0;
}

}  // namespace

TEST_CASE("match_frame: exact detections are all TP") {
  Frame frame;
  frame.gt_boxes = {box_at(0.0, 0.0, 0), box_at(10.0, 0.0, 1)};
  std::vector<Detection> dets = {det_at(0.0, 0.0, 0, 1.0), det_at(10.0, 0.0, 1, 1.0)};
  std::vector<bool> tp = match_frame(dets, frame.gt_boxes, {});
  CHECK(tp == std::vector<bool>{true, true});
}

TEST_CASE("match_frame: higher-score detection claims the shared GT") {
  Frame frame;
  frame.gt_boxes = {box_at(0.0, 0.0, 0)};
  // both overlap the single GT above threshold, scores 0.9 and 0.8
  std::vector<Detection> dets = {det_at(0.2, 0.0, 0, 0.8), det_at(0.1, 0.0, 0, 0.9)};
  std::vector<bool> tp = match_frame(dets, frame.gt_boxes, {});
  CHECK(tp == std::vector<bool>{false, true});
}

TEST_CASE("match_frame: class mismatch never matches") {
  Frame frame;
  frame.gt_boxes = {box_at(0.0, 0.0, 0)};
  std::vector<Detection> dets = {det_at(0.0, 0.0, 1, 1.0)};
  std::vector<bool> tp = match_frame(dets, frame.gt_boxes, {});
  CHECK(tp == std::vector<bool>{false});
}

TEST_CASE("average_precision hand cases") {
  CHECK(average_precision({{1.0, true}, {0.9, true}}, 2, 40) == doctest::Approx(1.0));
  CHECK(average_precision({{1.0, false}, {0.9, false}}, 2, 40) == doctest::Approx(0.0));
  // 1 TP then 1 FP over 2 GT: precision 1.0 up to recall 0.5, nothing beyond
  CHECK(average_precision({{1.0, true}, {0.9, false}}, 2, 40) == doctest::Approx(0.5));
  CHECK_THROWS_AS(average_precision({}, 0, 40), DataError);
}

TEST_CASE("average_precision equals the independent R40 reference") {
  Rng rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    int n = rng.uniform_int(1, 20);
    long num_gt = rng.uniform_int(1, 10);
    std::vector<std::pair<double, bool>> flags;
    long tp_budget = num_gt;
    for (int i = 0; i < n; ++i) {
      bool tp = tp_budget > 0 && rng.uniform() < 0.5;
      if (tp) --tp_budget;
      flags.emplace_back(rng.uniform(), tp);
    }
    CHECK(average_precision(flags, num_gt, 40) ==
          doctest::Approx(reference_ap(flags, num_gt)).epsilon(1e-12));
  }
}

TEST_CASE("AP monotonicity under added TP and FP") {
  Rng rng(73);
  for (int trial = 0; trial < 100; ++trial) {
    int n = rng.uniform_int(1, 15);
    long num_gt = rng.uniform_int(2, 10);
    std::vector<std::pair<double, bool>> flags;
    long tps = 0;
    for (int i = 0; i < n; ++i) {
      bool tp = tps < num_gt - 1 && rng.uniform() < 0.5;
      tps += tp;
      flags.emplace_back(rng.uniform(0.1, 0.9), tp);
    }
    double base = average_precision(flags, num_gt, 40);

    auto with_tp = flags;
    with_tp.emplace_back(1.0, true);  // top-score TP
    CHECK(average_precision(with_tp, num_gt, 40) >= base - 1e-12);

    auto with_fp = flags;
    with_fp.emplace_back(0.0, false);  // bottom-score FP
    CHECK(average_precision(with_fp, num_gt, 40) <= base + 1e-12);
  }
}

TEST_CASE("evaluate_detections equals the brute-force pipeline on micro instances") {
  Rng rng(79);
  for (int trial = 0; trial < 20; ++trial) {
    int num_frames = rng.uniform_int(1, 3);
    int num_classes = rng.uniform_int(1, 2);
    std::vector<Frame> frames(static_cast<std::size_t>(num_frames));
    std::vector<std::vector<Detection>> dets(static_cast<std::size_t>(num_frames));
    for (int f = 0; f < num_frames; ++f) {
      frames[static_cast<std::size_t>(f)].frame_id = f;
      int gts = rng.uniform_int(1, 5);
      for (int g = 0; g < gts; ++g) {
        Box3D gt = box_at(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0),
                          rng.uniform_int(0, num_classes - 1));
        frames[static_cast<std::size_t>(f)].gt_boxes.push_back(gt);
        // noisy detection near the GT plus occasional far FP
        if (rng.uniform() < 0.8) {
          Detection d = det_at(gt.center.x() + rng.uniform(-0.4, 0.4),
                               gt.center.y() + rng.uniform(-0.4, 0.4),
                               rng.uniform() < 0.85 ? gt.class_id
                                                    : rng.uniform_int(0, num_classes - 1),
                               rng.uniform());
          dets[static_cast<std::size_t>(f)].push_back(d);
        }
        if (rng.uniform() < 0.3) {
          dets[static_cast<std::size_t>(f)].push_back(
              det_at(rng.uniform(20.0, 40.0), rng.uniform(20.0, 40.0),
                     rng.uniform_int(0, num_classes - 1), rng.uniform()));
        }
      }
    }
    EvalReport report = evaluate_detections(dets, frames, num_classes, {});
    CHECK(report.mAP ==
          doctest::Approx(reference_map(dets, frames, num_classes, 0.5)).epsilon(1e-12));
    // TP bound per class per frame
    for (int c = 0; c < num_classes; ++c) {
      long gt_total = 0, det_total = 0;
      for (int f = 0; f < num_frames; ++f) {
        for (const Box3D& g : frames[static_cast<std::size_t>(f)].gt_boxes)
          gt_total += g.class_id == c;
        for (const Detection& d : dets[static_cast<std::size_t>(f)])
          det_total += d.box.class_id == c;
      }
      CHECK(report.tp[static_cast<std::size_t>(c)] <= std::min(gt_total, det_total));
    }
  }
}

TEST_CASE("oracle detections give mAP 1 and absent detections give 0") {
  SceneConfig cfg = default_scene_config(2);
  cfg.num_sequences = 3;
  cfg.frames_per_sequence = 2;
  cfg.seed = 83;
  std::vector<Frame> frames = generate_dataset(cfg);

  std::vector<std::vector<Detection>> oracle(frames.size());
  std::vector<std::vector<Detection>> nothing(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (const Box3D& gt : frames[f].gt_boxes) {
      Detection d;
      d.box = gt;
      d.score = 1.0;
      oracle[f].push_back(d);
    }
  }
  EvalReport perfect = evaluate_detections(oracle, frames, 2, {});
  CHECK(perfect.mAP == doctest::Approx(1.0));
  EvalReport empty = evaluate_detections(nothing, frames, 2, {});
  CHECK(empty.mAP == doctest::Approx(0.0));
  long fn_total = 0, gt_total = 0;
  for (std::size_t c = 0; c < 2; ++c) fn_total += empty.fn[c];
  for (const Frame& f : frames) gt_total += static_cast<long>(f.gt_boxes.size());
  CHECK(fn_total == gt_total);
}

TEST_CASE("classes without GT are excluded from the mAP mean") {
  Frame frame;
  frame.frame_id = 0;
  frame.gt_boxes = {box_at(0.0, 0.0, 0)};
  std::vector<std::vector<Detection>> dets = {{det_at(0.0, 0.0, 0, 1.0)}};
  EvalReport report = evaluate_detections(dets, {frame}, 3, {});
  CHECK(report.mAP == doctest::Approx(1.0));  // only class 0 counts
  CHECK(report.has_gt == std::vector<bool>{true, false, false});
}

TEST_CASE("mAP is invariant under increasing per-class score rescaling") {
  Rng rng(89);
  Frame frame;
  frame.frame_id = 0;
  std::vector<Detection> dets;
  for (int g = 0; g < 6; ++g) {
    Box3D gt = box_at(5.0 * g, 0.0, g % 2);
    frame.gt_boxes.push_back(gt);
    if (g != 3) dets.push_back(det_at(5.0 * g + rng.uniform(-0.3, 0.3), 0.0, g % 2,
                                      rng.uniform(0.2, 0.9)));
  }
  dets.push_back(det_at(100.0, 0.0, 0, 0.5));  // FP

  EvalReport a = evaluate_detections({dets}, {frame}, 2, {});
  std::vector<Detection> rescaled = dets;
  for (Detection& d : rescaled)
    d.score = d.box.class_id == 0 ? 3.0 * d.score + 1.0 : std::exp(d.score);
  EvalReport b = evaluate_detections({rescaled}, {frame}, 2, {});
  CHECK(a.mAP == doctest::Approx(b.mAP).epsilon(1e-12));
}

TEST_CASE("evaluate rejects an empty test set and is thread-count invariant") {
  ModelState model = make_model(2, 1);
  CHECK_THROWS_AS(evaluate(model, {}, {}, {}), DataError);

  SceneConfig cfg = default_scene_config(2);
  cfg.num_sequences = 4;
  cfg.frames_per_sequence = 3;
  cfg.seed = 97;
  std::vector<Frame> frames = generate_dataset(cfg);
  TrainParams params;
  params.epochs = 10;
  train(model, frames, params);

  setenv("ACTIVELOOP_THREADS", "1", 1);
  EvalReport seq = evaluate(model, frames, {}, {});
  unsetenv("ACTIVELOOP_THREADS");
  EvalReport par = evaluate(model, frames, {}, {});
  CHECK(seq.mAP == par.mAP);
  CHECK(seq.ap == par.ap);
}
