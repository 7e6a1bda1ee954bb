#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "activeloop/acquisition.hpp"
#include "activeloop/common.hpp"

using namespace activeloop;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Detection det_with_probs(const Eigen::VectorXd& probs) {
  Detection d;
  d.probs = probs;
  d.objectness = 1.0 - probs(probs.size() - 1);
  int fg = 0;
  probs.head(probs.size() - 1).maxCoeff(&fg);
  d.box.class_id = fg;
  d.feature = Eigen::VectorXd::Zero(2);
  d.grad_embedding = Eigen::VectorXd::Zero(3);
  return d;
}

FrameScoreRecord record_with_dets(int frame_id, std::vector<Detection> dets,
                                  int seq = 0, int index = 0) {
  Frame f;
  f.frame_id = frame_id;
  f.sequence_id = seq;
  f.index_in_sequence = index;
  return make_record(f, std::move(dets), 2, 3);
}

FrameScoreRecord record_with_embedding(int frame_id, const Eigen::VectorXd& emb) {
  FrameScoreRecord r = record_with_dets(frame_id, {});
  r.frame_embedding = emb;
  return r;
}

FrameScoreRecord record_with_grad(int frame_id, const Eigen::VectorXd& grad) {
  FrameScoreRecord r = record_with_dets(frame_id, {});
  r.frame_grad_embedding = grad;
  return r;
}

}  // namespace

TEST_CASE("entropy basics: uniform maximum, one-hot zero") {
  CHECK(entropy(vec({0.25, 0.25, 0.25, 0.25})) == doctest::Approx(std::log(4.0)));
  CHECK(entropy(vec({1.0, 0.0, 0.0})) == 0.0);
  CHECK(entropy(vec({0.5, 0.5})) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("entropy bounds over random probability vectors") {
  Rng rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    int c = rng.uniform_int(2, 6);
    Eigen::VectorXd p(c);
    for (int i = 0; i < c; ++i) p(i) = -std::log(std::max(rng.uniform(), 1e-12));
    p /= p.sum();
    double h = entropy(p);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(c)) + 1e-12);
  }
  // exact bound at uniform
  for (int c = 2; c <= 6; ++c) {
    Eigen::VectorXd u = Eigen::VectorXd::Constant(c, 1.0 / c);
    CHECK(std::abs(entropy(u) - std::log(static_cast<double>(c))) < 1e-12);
  }
}

TEST_CASE("entropy_score aggregates per-detection entropies") {
  // detections engineered for entropies 0.2 and 0.6 via direct probe vectors
  auto probs_with_entropy = [](double target) {
    // binary vector (p, 1-p) whose entropy equals target, bisection
    double lo = 0.5, hi = 1.0 - 1e-12;
    for (int i = 0; i < 200; ++i) {
      double mid = 0.5 * (lo + hi);
      double h = -mid * std::log(mid) - (1.0 - mid) * std::log(1.0 - mid);
      if (h > target) lo = mid;
      else hi = mid;
    }
    return vec({lo, 1.0 - lo});
  };
  FrameScoreRecord rec = record_with_dets(
      1, {det_with_probs(probs_with_entropy(0.2)), det_with_probs(probs_with_entropy(0.6))});

  ScoreOptions opts;
  CHECK(entropy_score(rec, opts) == doctest::Approx(0.4).epsilon(1e-6));
  opts.aggregation = Aggregation::Sum;
  CHECK(entropy_score(rec, opts) == doctest::Approx(0.8).epsilon(1e-6));
  opts.aggregation = Aggregation::Max;
  CHECK(entropy_score(rec, opts) == doctest::Approx(0.6).epsilon(1e-6));

  CHECK(entropy_score(record_with_dets(2, {})) == 0.0);
}

TEST_CASE("entropy_foreground_only renormalizes over foreground classes") {
  // uniform over 2 fg + bg: full entropy ln 3, foreground-only ln 2
  FrameScoreRecord rec =
      record_with_dets(1, {det_with_probs(vec({1.0 / 3, 1.0 / 3, 1.0 / 3}))});
  ScoreOptions opts;
  CHECK(entropy_score(rec, opts) == doctest::Approx(std::log(3.0)));
  opts.entropy_foreground_only = true;
  CHECK(entropy_score(rec, opts) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("confidence_score is mean objectness uncertainty") {
  Detection sure = det_with_probs(vec({1.0, 0.0}));     // objectness 1
  Detection unsure = det_with_probs(vec({0.25, 0.75})); // objectness 0.25
  CHECK(confidence_score(record_with_dets(1, {sure})) == 0.0);
  CHECK(confidence_score(record_with_dets(2, {unsure})) == doctest::Approx(0.75));

  Detection a = det_with_probs(vec({0.9, 0.1}));
  Detection b = det_with_probs(vec({0.5, 0.5}));
  CHECK(confidence_score(record_with_dets(3, {a, b})) == doctest::Approx(0.3));
  CHECK(confidence_score(record_with_dets(4, {})) == 0.0);
}

TEST_CASE("mc_variance_score matches the two-point oracle") {
  FrameScoreRecord rec = record_with_dets(1, {det_with_probs(vec({0.5, 0.5}))});
  rec.pass_probs = {{vec({1.0, 0.0}), vec({0.0, 1.0})}};
  rec.has_passes = true;
  // sample variance per class = 0.5, trace over 2 classes = 1
  CHECK(mc_variance_score(rec) == doctest::Approx(1.0));

  rec.pass_probs = {{vec({0.3, 0.7}), vec({0.3, 0.7})}};
  CHECK(mc_variance_score(rec) == 0.0);

  rec.pass_probs = {{vec({0.3, 0.7})}};  // single pass
  CHECK(mc_variance_score(rec) == 0.0);

  FrameScoreRecord no_passes = record_with_dets(2, {det_with_probs(vec({0.5, 0.5}))});
  CHECK_THROWS_AS(mc_variance_score(no_passes), DataError);
}

TEST_CASE("coreset picks the farthest point from the labeled set") {
  std::vector<FrameScoreRecord> pool = {record_with_embedding(0, vec({1.0})),
                                        record_with_embedding(1, vec({2.0})),
                                        record_with_embedding(2, vec({10.0}))};
  SelectionResult res = coreset_select(pool, {vec({0.0})}, 1);
  REQUIRE(res.selected.size() == 1);
  CHECK(res.selected[0] == 2);

  SelectionResult one = coreset_select({record_with_embedding(7, vec({3.0}))}, {}, 1);
  REQUIRE(one.selected.size() == 1);
  CHECK(one.selected[0] == 7);
}

TEST_CASE("coreset greedy is a 2-approximation of the optimal k-center") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    int n = rng.uniform_int(3, 10);
    int k = rng.uniform_int(1, 3);
    std::vector<FrameScoreRecord> pool;
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd p = vec({rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)});
      pts.push_back(p);
      pool.push_back(record_with_embedding(i, p));
    }
    SelectionResult res = coreset_select(pool, {}, k);
    REQUIRE(static_cast<int>(res.selected.size()) == std::min(k, n));

    auto radius = [&pts, n](const std::vector<int>& centers) {
      double r = 0.0;
      for (int i = 0; i < n; ++i) {
        double best = 1e300;
        for (int c : centers)
          best = std::min(best, (pts[static_cast<std::size_t>(i)] -
                                 pts[static_cast<std::size_t>(c)]).norm());
        r = std::max(r, best);
      }
      return r;
    };

    // exhaustive optimum over all center subsets of size k
    double opt = 1e300;
    std::vector<int> subset(static_cast<std::size_t>(k));
    std::function<void(int, int)> enumerate = [&](int start, int depth) {
      if (depth == k) {
        opt = std::min(opt, radius(subset));
        return;
      }
      for (int i = start; i < n; ++i) {
        subset[static_cast<std::size_t>(depth)] = i;
        enumerate(i + 1, depth + 1);
      }
    };
    enumerate(0, 0);

    CHECK(radius(res.selected) <= 2.0 * opt + 1e-9);
  }
}

TEST_CASE("badge first pick has D-squared mass proportional to grad norms") {
  // all-zero gradients except one frame: that frame is always first
  std::vector<FrameScoreRecord> pool = {record_with_grad(0, vec({0.0, 0.0})),
                                        record_with_grad(1, vec({3.0, 4.0})),
                                        record_with_grad(2, vec({0.0, 0.0}))};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SelectionResult res = badge_select(pool, 1, seed);
    REQUIRE(res.selected.size() == 1);
    CHECK(res.selected[0] == 1);
  }
}

TEST_CASE("badge exhausts the pool when budget covers it") {
  std::vector<FrameScoreRecord> pool = {record_with_grad(0, vec({1.0, 0.0})),
                                        record_with_grad(1, vec({0.0, 1.0})),
                                        record_with_grad(2, vec({-1.0, 0.0}))};
  SelectionResult res = badge_select(pool, 3, 5);
  std::set<int> ids(res.selected.begin(), res.selected.end());
  CHECK(ids == std::set<int>{0, 1, 2});

  // all-zero gradients: deterministic smallest-id fallback
  std::vector<FrameScoreRecord> zeros = {record_with_grad(4, vec({0.0})),
                                         record_with_grad(3, vec({0.0}))};
  SelectionResult z = badge_select(zeros, 2, 1);
  CHECK(z.selected == std::vector<int>{4, 3});  // record order, ids 4 then 3
}

TEST_CASE("badge is deterministic per seed") {
  Rng rng(23);
  std::vector<FrameScoreRecord> pool;
  for (int i = 0; i < 12; ++i)
    pool.push_back(record_with_grad(i, vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)})));
  SelectionResult a = badge_select(pool, 5, 77);
  SelectionResult b = badge_select(pool, 5, 77);
  CHECK(a.selected == b.selected);
  SelectionResult c = badge_select(pool, 5, 78);
  bool differs = a.selected != c.selected;
  CHECK(differs);  // 12 choose 5 makes a seed collision overwhelmingly unlikely
}

TEST_CASE("density signature bins rho by detection distance") {
  Detection near = det_with_probs(vec({0.6, 0.4}));
  near.point_count = 100;
  near.distance = 5.0;
  Detection far = det_with_probs(vec({0.6, 0.4}));
  far.point_count = 4;
  far.distance = 45.0;
  FrameScoreRecord rec = record_with_dets(1, {near, far});
  rec.detections[0].point_count = 100;
  rec.detections[0].distance = 5.0;
  rec.detections[1].point_count = 4;
  rec.detections[1].distance = 45.0;

  Eigen::VectorXd sig = density_signature(rec, 5, 10.0, 50.0);
  REQUIRE(sig.size() == 5);
  // near detection: clamped distance 10 -> rho = 100 * 100; bin 0 (5/50*5 = 0.5)
  CHECK(sig(0) == doctest::Approx(100.0 * 100.0));
  // far detection: rho = 4 * 45^2; bin 4 (45/50*5 = 4.5)
  CHECK(sig(4) == doctest::Approx(4.0 * 45.0 * 45.0));
  CHECK(sig(1) == 0.0);
  CHECK(sig(2) == 0.0);
  CHECK(sig(3) == 0.0);
}

TEST_CASE("balance greedy picks the most uniform signature") {
  std::vector<Eigen::VectorXd> sigs = {vec({1.0, 0.0}), vec({0.0, 1.0}),
                                       vec({0.5, 0.5})};
  std::vector<int> picked = balance_greedy(sigs, {10, 11, 12}, 1);
  REQUIRE(picked.size() == 1);
  CHECK(picked[0] == 12);
}

TEST_CASE("balance greedy matches exhaustive KL enumeration") {
  Rng rng(31);
  auto kl_uniform = [](const Eigen::VectorXd& mass) {
    Eigen::VectorXd s = mass.array() + 1.0;
    s /= s.sum();
    double kl = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      kl += s(i) * std::log(s(i) * static_cast<double>(s.size()));
    return kl;
  };
  for (int trial = 0; trial < 50; ++trial) {
    int n = rng.uniform_int(3, 7);
    std::vector<Eigen::VectorXd> sigs;
    std::vector<int> ids;
    for (int i = 0; i < n; ++i) {
      sigs.push_back(vec({rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0),
                          rng.uniform(0.0, 10.0)}));
      ids.push_back(i);
    }
    // the greedy's first pick must minimize single-signature KL exactly
    std::vector<int> picked = balance_greedy(sigs, ids, 1);
    REQUIRE(picked.size() == 1);
    double best = 1e300;
    int best_id = -1;
    for (int i = 0; i < n; ++i) {
      double kl = kl_uniform(sigs[static_cast<std::size_t>(i)]);
      if (kl < best) {
        best = kl;
        best_id = i;
      }
    }
    CHECK(picked[0] == best_id);
  }
}

namespace {

// Pool of frames with controllable predicted classes, distances and gradients.
std::vector<FrameScoreRecord> crb_pool(int frames, int dets_per_frame, Rng& rng,
                                       int num_classes = 3) {
  std::vector<FrameScoreRecord> pool;
  for (int f = 0; f < frames; ++f) {
    std::vector<Detection> dets;
    for (int d = 0; d < dets_per_frame; ++d) {
      Eigen::VectorXd probs(num_classes + 1);
      for (Eigen::Index i = 0; i < probs.size(); ++i)
        probs(i) = -std::log(std::max(rng.uniform(), 1e-12));
      probs /= probs.sum();
      Detection det = det_with_probs(probs);
      det.point_count = rng.uniform_int(5, 200);
      det.distance = rng.uniform(2.0, 48.0);
      det.grad_embedding = vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                                rng.uniform(-1.0, 1.0)});
      det.feature = vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
      dets.push_back(det);
    }
    Frame frame;
    frame.frame_id = f;
    frame.sequence_id = f / 10;
    frame.index_in_sequence = f % 10;
    pool.push_back(make_record(frame, std::move(dets), 2, 3));
  }
  return pool;
}

}  // namespace

TEST_CASE("crb stage C prefers classes missing from the labeled pool") {
  // two frames identical except for the predicted class; labels skewed to 0
  Eigen::VectorXd p0 = vec({0.8, 0.1, 0.1});  // predicts class 0
  Eigen::VectorXd p1 = vec({0.1, 0.8, 0.1});  // predicts class 1
  std::vector<FrameScoreRecord> pool = {
      record_with_dets(0, {det_with_probs(p0)}),
      record_with_dets(1, {det_with_probs(p1)})};
  std::vector<long> labeled_hist = {50, 1};
  // k1_factor 1 makes stage C the deciding stage at this pool size
  CrbParams params;
  params.k1_factor = 1;
  params.k2_factor = 1;
  SelectionResult res = crb_select(pool, labeled_hist, 1, params);
  REQUIRE(res.selected.size() == 1);
  CHECK(res.selected[0] == 1);
  CHECK(res.scores.at(1) > res.scores.at(0));
}

TEST_CASE("crb passes through when budget covers the pool") {
  Rng rng(41);
  std::vector<FrameScoreRecord> pool = crb_pool(6, 2, rng);
  SelectionResult res = crb_select(pool, {1, 1, 1}, 6);
  std::set<int> ids(res.selected.begin(), res.selected.end());
  CHECK(ids == std::set<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("crb selection size and purity") {
  Rng rng(43);
  std::vector<FrameScoreRecord> pool = crb_pool(40, 3, rng);
  SelectionResult a = crb_select(pool, {5, 2, 9}, 7);
  SelectionResult b = crb_select(pool, {5, 2, 9}, 7);
  CHECK(a.selected == b.selected);  // purity
  CHECK(a.selected.size() == 7);
  std::set<int> distinct(a.selected.begin(), a.selected.end());
  CHECK(distinct.size() == 7);
  for (int id : a.selected) {
    CHECK(id >= 0);
    CHECK(id < 40);
  }
}

TEST_CASE("tcrb with window 1 equals crb id-for-id") {
  Rng rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<FrameScoreRecord> pool = crb_pool(30, 2, rng);
    int budget = rng.uniform_int(2, 12);
    SelectionResult crb = crb_select(pool, {3, 1, 4}, budget);
    SelectionResult tcrb = tcrb_select(pool, {3, 1, 4}, budget, 1);
    CHECK(crb.selected == tcrb.selected);
  }
}

TEST_CASE("tcrb prefers the high-entropy sequence window") {
  // sequence 0: one-hot predictions; sequence 1: uniform predictions
  std::vector<FrameScoreRecord> pool;
  for (int f = 0; f < 4; ++f) {
    Detection d = det_with_probs(vec({1.0, 0.0, 0.0}));
    d.point_count = 50;
    d.distance = 10.0;
    pool.push_back(record_with_dets(f, {d, d}, 0, f));
  }
  for (int f = 0; f < 4; ++f) {
    Detection a = det_with_probs(vec({0.5, 0.45, 0.05}));
    Detection b = det_with_probs(vec({0.05, 0.5, 0.45}));
    a.point_count = b.point_count = 50;
    a.distance = b.distance = 10.0;
    pool.push_back(record_with_dets(4 + f, {a, b}, 1, f));
  }
  CrbParams params;
  params.k1_factor = 1;  // stage C decides between the two candidate windows
  params.k2_factor = 1;
  SelectionResult res = tcrb_select(pool, {0, 0, 0}, 4, 4, params);
  REQUIRE(res.selected.size() == 4);
  for (int id : res.selected) CHECK(id >= 4);  // the whole window is sequence 1
  // full windows are index-contiguous
  CHECK(res.selected == std::vector<int>{4, 5, 6, 7});
}

TEST_CASE("tcrb full windows are contiguous and the remainder fills the budget") {
  Rng rng(53);
  std::vector<FrameScoreRecord> pool = crb_pool(30, 2, rng);  // 3 sequences of 10
  int window = 4;
  int budget = 10;  // 2 windows + 2 remainder frames
  SelectionResult res = tcrb_select(pool, {2, 2, 2}, budget, window);
  CHECK(static_cast<int>(res.selected.size()) == budget);
  std::set<int> distinct(res.selected.begin(), res.selected.end());
  CHECK(distinct.size() == res.selected.size());
}

TEST_CASE("tcrb guards window and budget") {
  Rng rng(59);
  std::vector<FrameScoreRecord> pool = crb_pool(10, 1, rng);
  CHECK_THROWS_AS(tcrb_select(pool, {1, 1, 1}, 5, 0), ConfigError);
  CHECK_THROWS_AS(tcrb_select(pool, {1, 1, 1}, 3, 5), ConfigError);
  // no sequence long enough for the window (budget below pool size so the
  // whole-pool shortcut does not apply)
  std::vector<FrameScoreRecord> shorties = {record_with_dets(0, {}, 0, 0),
                                            record_with_dets(1, {}, 1, 0),
                                            record_with_dets(2, {}, 2, 0)};
  CHECK_THROWS_AS(tcrb_select(shorties, {1, 1}, 2, 2), DataError);
}

TEST_CASE("random_select is a seeded uniform sample") {
  std::vector<int> pool = {5, 3, 9, 1, 7};
  SelectionResult a = random_select(pool, 3, 11);
  SelectionResult b = random_select(pool, 3, 11);
  CHECK(a.selected == b.selected);
  CHECK(a.selected.size() == 3);

  // pool order must not matter
  std::vector<int> shuffled = {9, 1, 5, 7, 3};
  SelectionResult c = random_select(shuffled, 3, 11);
  CHECK(a.selected == c.selected);

  SelectionResult all = random_select(pool, 10, 2);
  std::set<int> ids(all.selected.begin(), all.selected.end());
  CHECK(ids == std::set<int>{1, 3, 5, 7, 9});

  CHECK_THROWS_AS(random_select(pool, 0, 1), ConfigError);
}

TEST_CASE("select dispatch ranks scalar strategies descending with id ties") {
  std::vector<FrameScoreRecord> pool;
  auto probs_for = [](double h_target) {
    double lo = 0.5, hi = 1.0 - 1e-9;
    for (int i = 0; i < 100; ++i) {
      double mid = 0.5 * (lo + hi);
      double h = -mid * std::log(mid) - (1.0 - mid) * std::log(1.0 - mid);
      if (h > h_target) lo = mid;
      else hi = mid;
    }
    return vec({lo, 1.0 - lo});
  };
  pool.push_back(record_with_dets(0, {det_with_probs(probs_for(0.1))}));
  pool.push_back(record_with_dets(1, {det_with_probs(probs_for(0.6))}));
  pool.push_back(record_with_dets(2, {det_with_probs(probs_for(0.3))}));

  SelectionResult res = select("entropy", pool, {}, 2);
  CHECK(res.selected == std::vector<int>{1, 2});

  // ties break toward the smaller frame id
  std::vector<FrameScoreRecord> ties;
  for (int i : {4, 2, 9})
    ties.push_back(record_with_dets(i, {det_with_probs(vec({0.5, 0.5}))}));
  SelectionResult tie = select("entropy", ties, {}, 2);
  CHECK(tie.selected == std::vector<int>{2, 4});

  // clamped to the pool, no error
  SelectionResult clamp = select("entropy", pool, {}, 99);
  CHECK(clamp.selected.size() == 3);

  CHECK_THROWS_AS(select("bogus", pool, {}, 1), ConfigError);
  CHECK_THROWS_AS(select("entropy", pool, {}, 0), ConfigError);
}

TEST_CASE("every strategy returns distinct pool ids of the right size") {
  Rng rng(61);
  std::vector<FrameScoreRecord> pool = crb_pool(24, 2, rng);
  for (auto& rec : pool) {  // give montecarlo something to chew on
    rec.has_passes = true;
    for (const Detection& d : rec.detections) {
      (void)d;
      rec.pass_probs.push_back({vec({0.5, 0.3, 0.1, 0.1}), vec({0.2, 0.4, 0.2, 0.2})});
    }
  }
  LabeledContext labeled;
  labeled.class_hist = {4, 4, 4};
  labeled.embeddings = {vec({0.0, 0.0})};
  SelectParams params;
  params.seed = 3;
  params.tcrb_window = 3;

  std::set<int> pool_ids;
  for (const auto& r : pool) pool_ids.insert(r.frame_id);

  for (const std::string& name : kStrategyNames) {
    SelectionResult res = select(name, pool, labeled, 6, params);
    CHECK(res.selected.size() == 6);
    std::set<int> distinct(res.selected.begin(), res.selected.end());
    CHECK(distinct.size() == 6);
    for (int id : res.selected) CHECK(pool_ids.count(id) == 1);

    SelectionResult again = select(name, pool, labeled, 6, params);
    CHECK(res.selected == again.selected);  // purity
  }
}
