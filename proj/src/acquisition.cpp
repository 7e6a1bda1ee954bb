#include "activeloop/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "activeloop/common.hpp"

namespace activeloop {

const std::vector<std::string> kStrategyNames = {
    "random", "entropy", "confidence", "montecarlo",
    "coreset", "badge", "crb", "tcrb"};

bool is_valid_strategy(const std::string& name) {
  return std::find(kStrategyNames.begin(), kStrategyNames.end(), name) !=
         kStrategyNames.end();
}

FrameScoreRecord make_record(const Frame& frame, std::vector<Detection> dets,
                             int embedding_dim, int grad_dim) {
  FrameScoreRecord rec;
  rec.frame_id = frame.frame_id;
  rec.sequence_id = frame.sequence_id;
  rec.index_in_sequence = frame.index_in_sequence;
  rec.frame_embedding = Eigen::VectorXd::Zero(embedding_dim);
  rec.frame_grad_embedding = Eigen::VectorXd::Zero(grad_dim);
  if (!dets.empty()) {
    for (const Detection& d : dets) {
      rec.frame_embedding += d.feature;
      rec.frame_grad_embedding += d.grad_embedding;
    }
    rec.frame_embedding /= static_cast<double>(dets.size());
    rec.frame_grad_embedding /= static_cast<double>(dets.size());
  }
  rec.detections = std::move(dets);
  return rec;
}

double entropy(const Eigen::VectorXd& probs) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    double p = probs(i);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

namespace {

double aggregate(const std::vector<double>& values, Aggregation agg) {
  if (values.empty()) return 0.0;
  switch (agg) {
    case Aggregation::Sum: {
      double s = 0.0;
      for (double v : values) s += v;
      return s;
    }
    case Aggregation::Max:
      return *std::max_element(values.begin(), values.end());
    case Aggregation::Mean:
    default: {
      double s = 0.0;
      for (double v : values) s += v;
      return s / static_cast<double>(values.size());
    }
  }
}

// Descending by score, ties by smaller frame id.
std::vector<int> top_k(const std::vector<std::pair<int, double>>& scored, int k) {
  std::vector<std::pair<int, double>> sorted = scored;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<int> ids;
  for (int i = 0; i < k && i < static_cast<int>(sorted.size()); ++i)
    ids.push_back(sorted[static_cast<std::size_t>(i)].first);
  return ids;
}

}  // namespace

double entropy_score(const FrameScoreRecord& record, const ScoreOptions& opts) {
  std::vector<double> per_det;
  for (const Detection& d : record.detections) {
    if (opts.entropy_foreground_only && d.probs.size() > 1) {
      Eigen::VectorXd fg = d.probs.head(d.probs.size() - 1);
      double s = fg.sum();
      if (s > 0.0) fg /= s;
      per_det.push_back(entropy(fg));
    } else {
      per_det.push_back(entropy(d.probs));
    }
  }
  return aggregate(per_det, opts.aggregation);
}

double confidence_score(const FrameScoreRecord& record, const ScoreOptions& opts) {
  std::vector<double> per_det;
  for (const Detection& d : record.detections) per_det.push_back(1.0 - d.objectness);
  return aggregate(per_det, opts.aggregation);
}

double mc_variance_score(const FrameScoreRecord& record, const ScoreOptions& opts) {
  if (!record.has_passes)
    throw DataError("mc_variance_score: per-pass probabilities absent");
  std::vector<double> per_det;
  for (const auto& passes : record.pass_probs) {
    const std::size_t n = passes.size();
    if (n < 2) {
      per_det.push_back(0.0);
      continue;
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(passes[0].size());
    for (const auto& p : passes) mean += p;
    mean /= static_cast<double>(n);
    double trace = 0.0;
    for (const auto& p : passes) trace += (p - mean).squaredNorm();
    trace /= static_cast<double>(n - 1);
    per_det.push_back(trace);
  }
  return aggregate(per_det, opts.aggregation);
}

SelectionResult coreset_select(const std::vector<FrameScoreRecord>& records,
                               const std::vector<Eigen::VectorXd>& labeled_embeddings,
                               int budget) {
  SelectionResult result;
  result.strategy = "coreset";
  const int n = static_cast<int>(records.size());
  const int b = std::min(budget, n);
  if (n == 0 || b <= 0) return result;

  // min squared distance from each pool frame to labeled ∪ selected
  std::vector<double> min_d2(static_cast<std::size_t>(n),
                             std::numeric_limits<double>::infinity());
  std::vector<bool> taken(static_cast<std::size_t>(n), false);

  if (labeled_embeddings.empty()) {
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(records[0].frame_embedding.size());
    for (const auto& r : records) centroid += r.frame_embedding;
    centroid /= static_cast<double>(n);
    int first = 0;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      double d2 = (records[static_cast<std::size_t>(i)].frame_embedding - centroid).squaredNorm();
      if (d2 > best ||
          (d2 == best && records[static_cast<std::size_t>(i)].frame_id <
                             records[static_cast<std::size_t>(first)].frame_id)) {
        best = d2;
        first = i;
      }
    }
    taken[static_cast<std::size_t>(first)] = true;
    result.selected.push_back(records[static_cast<std::size_t>(first)].frame_id);
    result.scores[records[static_cast<std::size_t>(first)].frame_id] = std::sqrt(best);
    for (int i = 0; i < n; ++i) {
      min_d2[static_cast<std::size_t>(i)] =
          (records[static_cast<std::size_t>(i)].frame_embedding -
           records[static_cast<std::size_t>(first)].frame_embedding)
              .squaredNorm();
    }
  } else {
    for (int i = 0; i < n; ++i) {
      for (const auto& e : labeled_embeddings) {
        min_d2[static_cast<std::size_t>(i)] =
            std::min(min_d2[static_cast<std::size_t>(i)],
                     (records[static_cast<std::size_t>(i)].frame_embedding - e).squaredNorm());
      }
    }
  }

  while (static_cast<int>(result.selected.size()) < b) {
    int pick = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      double d2 = min_d2[static_cast<std::size_t>(i)];
      if (d2 > best || (d2 == best && pick >= 0 &&
                        records[static_cast<std::size_t>(i)].frame_id <
                            records[static_cast<std::size_t>(pick)].frame_id)) {
        best = d2;
        pick = i;
      }
    }
    if (pick < 0) break;
    taken[static_cast<std::size_t>(pick)] = true;
    result.selected.push_back(records[static_cast<std::size_t>(pick)].frame_id);
    result.scores[records[static_cast<std::size_t>(pick)].frame_id] = std::sqrt(best);
    for (int i = 0; i < n; ++i) {
      min_d2[static_cast<std::size_t>(i)] =
          std::min(min_d2[static_cast<std::size_t>(i)],
                   (records[static_cast<std::size_t>(i)].frame_embedding -
                    records[static_cast<std::size_t>(pick)].frame_embedding)
                       .squaredNorm());
    }
  }
  return result;
}

SelectionResult badge_select(const std::vector<FrameScoreRecord>& records, int budget,
                             std::uint64_t seed) {
  SelectionResult result;
  result.strategy = "badge";
  const int n = static_cast<int>(records.size());
  const int b = std::min(budget, n);
  if (n == 0 || b <= 0) return result;

  Rng rng(hash_combine(seed, hash_string("badge")));
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  // D² to the nearest chosen center; initialized to squared norm so the
  // first draw is proportional to gradient magnitude.
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    d2[static_cast<std::size_t>(i)] =
        records[static_cast<std::size_t>(i)].frame_grad_embedding.squaredNorm();

  for (int pick_idx = 0; pick_idx < b; ++pick_idx) {
    double total = 0.0;
    for (int i = 0; i < n; ++i)
      if (!taken[static_cast<std::size_t>(i)]) total += d2[static_cast<std::size_t>(i)];
    int pick = -1;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        acc += d2[static_cast<std::size_t>(i)];
        if (r < acc) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {  // numeric edge at r == total
        for (int i = n - 1; i >= 0; --i)
          if (!taken[static_cast<std::size_t>(i)]) { pick = i; break; }
      }
    } else {
      // Degenerate mass: fall back to the smallest remaining frame id.
      for (int i = 0; i < n; ++i)
        if (!taken[static_cast<std::size_t>(i)]) { pick = i; break; }
    }
    taken[static_cast<std::size_t>(pick)] = true;
    result.selected.push_back(records[static_cast<std::size_t>(pick)].frame_id);
    result.scores[records[static_cast<std::size_t>(pick)].frame_id] =
        std::sqrt(d2[static_cast<std::size_t>(pick)]);
    for (int i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)],
                   (records[static_cast<std::size_t>(i)].frame_grad_embedding -
                    records[static_cast<std::size_t>(pick)].frame_grad_embedding)
                       .squaredNorm());
    }
  }
  return result;
}

Eigen::VectorXd density_signature(const FrameScoreRecord& record, int bins, double d0,
                                  double d_max) {
  Eigen::VectorXd sig = Eigen::VectorXd::Zero(bins);
  if (d_max <= 0.0) d_max = d0;
  for (const Detection& d : record.detections) {
    double rho = static_cast<double>(d.point_count) * std::pow(std::max(d.distance, d0), 2);
    int bin = static_cast<int>(d.distance / d_max * bins);
    bin = std::clamp(bin, 0, bins - 1);
    sig(bin) += rho;
  }
  return sig;
}

namespace {

double kl_to_uniform(const Eigen::VectorXd& pooled_mass) {
  const Eigen::Index bins = pooled_mass.size();
  Eigen::VectorXd smoothed = pooled_mass.array() + 1.0;  // add-1 smoothing
  smoothed /= smoothed.sum();
  double kl = 0.0;
  for (Eigen::Index i = 0; i < bins; ++i) {
    kl += smoothed(i) * std::log(smoothed(i) * static_cast<double>(bins));
  }
  return kl;
}

// One selection unit: a frame for CRB, a frame window for T-CRB. Both
// paths run through identical stage code so window=1 reduces exactly.
struct Unit {
  int id = 0;  // first member frame id, used for all tie-breaking
  int sequence_id = 0;
  int first_index = 0;
  std::vector<int> frame_ids;
  std::vector<const Detection*> detections;
  Eigen::VectorXd grad_embedding;
  Eigen::VectorXd signature;
  double stage_c = 0.0;
};

double conciseness(const Unit& unit, const std::vector<long>& labeled_hist) {
  const int C = static_cast<int>(labeled_hist.size());
  std::vector<double> joined(static_cast<std::size_t>(C));
  double total = 0.0;
  for (int k = 0; k < C; ++k) {
    joined[static_cast<std::size_t>(k)] = static_cast<double>(labeled_hist[static_cast<std::size_t>(k)]);
  }
  for (const Detection* d : unit.detections) {
    int cls = d->box.class_id;
    if (cls >= 0 && cls < C) joined[static_cast<std::size_t>(cls)] += 1.0;
  }
  for (double v : joined) total += v;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double v : joined) {
    double p = v / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<std::size_t> stage_c_filter(const std::vector<Unit>& units, int keep) {
  std::vector<std::size_t> order(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&units](std::size_t a, std::size_t b) {
    if (units[a].stage_c != units[b].stage_c) return units[a].stage_c > units[b].stage_c;
    return units[a].id < units[b].id;
  });
  if (static_cast<int>(order.size()) > keep) order.resize(static_cast<std::size_t>(keep));
  return order;
}

std::vector<std::size_t> stage_r_filter(const std::vector<Unit>& units,
                                        const std::vector<std::size_t>& survivors,
                                        int keep) {
  const std::size_t n = survivors.size();
  if (static_cast<int>(n) <= keep) return survivors;

  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(units[survivors[0]].grad_embedding.size());
  for (std::size_t s : survivors) centroid += units[s].grad_embedding;
  centroid /= static_cast<double>(n);

  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> picked;

  // farthest-from-centroid start, then k-center greedy
  std::size_t first = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d2 = (units[survivors[i]].grad_embedding - centroid).squaredNorm();
    if (d2 > best || (d2 == best && units[survivors[i]].id < units[survivors[first]].id)) {
      best = d2;
      first = i;
    }
  }
  taken[first] = true;
  picked.push_back(survivors[first]);
  for (std::size_t i = 0; i < n; ++i)
    min_d2[i] = (units[survivors[i]].grad_embedding - units[survivors[first]].grad_embedding)
                    .squaredNorm();

  while (static_cast<int>(picked.size()) < keep) {
    std::size_t pick = n;
    best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (min_d2[i] > best ||
          (min_d2[i] == best && pick < n && units[survivors[i]].id < units[survivors[pick]].id)) {
        best = min_d2[i];
        pick = i;
      }
    }
    if (pick == n) break;
    taken[pick] = true;
    picked.push_back(survivors[pick]);
    for (std::size_t i = 0; i < n; ++i)
      min_d2[i] = std::min(min_d2[i], (units[survivors[i]].grad_embedding -
                                       units[survivors[pick]].grad_embedding)
                                          .squaredNorm());
  }
  return picked;
}

// Stage B over units with an optional frame-disjointness constraint.
std::vector<std::size_t> stage_b_greedy(const std::vector<Unit>& units,
                                        const std::vector<std::size_t>& survivors,
                                        int budget_units, bool enforce_disjoint) {
  std::vector<std::size_t> picked;
  std::set<int> used_frames;
  Eigen::VectorXd pooled;
  std::vector<bool> taken(survivors.size(), false);

  while (static_cast<int>(picked.size()) < budget_units) {
    std::size_t pick = survivors.size();
    double best_kl = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      if (taken[i]) continue;
      const Unit& u = units[survivors[i]];
      if (enforce_disjoint) {
        bool overlap = false;
        for (int fid : u.frame_ids)
          if (used_frames.count(fid)) { overlap = true; break; }
        if (overlap) continue;
      }
      Eigen::VectorXd candidate_pool =
          (pooled.size() == 0) ? u.signature : Eigen::VectorXd(pooled + u.signature);
      double kl = kl_to_uniform(candidate_pool);
      if (kl < best_kl ||
          (kl == best_kl && pick < survivors.size() &&
           units[survivors[i]].id < units[survivors[pick]].id)) {
        best_kl = kl;
        pick = i;
      }
    }
    if (pick == survivors.size()) break;
    taken[pick] = true;
    const Unit& u = units[survivors[pick]];
    pooled = (pooled.size() == 0) ? u.signature : Eigen::VectorXd(pooled + u.signature);
    for (int fid : u.frame_ids) used_frames.insert(fid);
    picked.push_back(survivors[pick]);
  }
  return picked;
}

double pool_d_max(const std::vector<FrameScoreRecord>& records, double d0) {
  double d_max = d0;
  for (const auto& r : records)
    for (const Detection& d : r.detections) d_max = std::max(d_max, d.distance);
  return d_max;
}

Unit unit_from_records(const std::vector<const FrameScoreRecord*>& members,
                       const std::vector<long>& labeled_hist, const CrbParams& params,
                       double d_max) {
  Unit u;
  u.id = members.front()->frame_id;
  u.sequence_id = members.front()->sequence_id;
  u.first_index = members.front()->index_in_sequence;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(members.front()->frame_grad_embedding.size());
  Eigen::VectorXd sig = Eigen::VectorXd::Zero(params.bins);
  for (const FrameScoreRecord* r : members) {
    u.frame_ids.push_back(r->frame_id);
    for (const Detection& d : r->detections) u.detections.push_back(&d);
    grad += r->frame_grad_embedding;
    sig += density_signature(*r, params.bins, params.d0, d_max);
  }
  u.grad_embedding = grad / static_cast<double>(members.size());
  u.signature = sig;
  u.stage_c = conciseness(u, labeled_hist);
  return u;
}

// Shared CRB pipeline over pre-built units. budget_units counts units.
std::vector<std::size_t> crb_pipeline(std::vector<Unit>& units, int budget_units,
                                      const CrbParams& params, bool enforce_disjoint,
                                      std::vector<std::size_t>* c_out = nullptr,
                                      std::vector<std::size_t>* r_out = nullptr) {
  const int pool = static_cast<int>(units.size());
  int k1 = std::min(params.k1_factor * budget_units, pool);
  std::vector<std::size_t> c_survivors = stage_c_filter(units, k1);
  int k2 = std::min(params.k2_factor * budget_units, static_cast<int>(c_survivors.size()));
  std::vector<std::size_t> r_survivors = stage_r_filter(units, c_survivors, k2);
  if (c_out) *c_out = c_survivors;
  if (r_out) *r_out = r_survivors;
  return stage_b_greedy(units, r_survivors, budget_units, enforce_disjoint);
}

void sort_by_sequence(std::vector<int>& ids,
                      const std::vector<FrameScoreRecord>& records) {
  std::map<int, std::pair<int, int>> pos;
  for (const auto& r : records) pos[r.frame_id] = {r.sequence_id, r.index_in_sequence};
  std::sort(ids.begin(), ids.end(), [&pos](int a, int b) {
    auto pa = pos.count(a) ? pos[a] : std::pair<int, int>{0, a};
    auto pb = pos.count(b) ? pos[b] : std::pair<int, int>{0, b};
    if (pa != pb) return pa < pb;
    return a < b;
  });
}

}  // namespace

std::vector<int> balance_greedy(const std::vector<Eigen::VectorXd>& signatures,
                                const std::vector<int>& ids, int budget) {
  std::vector<Unit> units(signatures.size());
  std::vector<std::size_t> all(signatures.size());
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    units[i].id = ids[i];
    units[i].frame_ids = {ids[i]};
    units[i].signature = signatures[i];
    all[i] = i;
  }
  std::vector<std::size_t> picked = stage_b_greedy(units, all, budget, false);
  std::vector<int> out;
  for (std::size_t p : picked) out.push_back(units[p].id);
  return out;
}

SelectionResult crb_select(const std::vector<FrameScoreRecord>& records,
                           const std::vector<long>& labeled_hist, int budget,
                           const CrbParams& params, CrbStageTrace* trace) {
  SelectionResult result;
  result.strategy = "crb";
  const int n = static_cast<int>(records.size());
  const int b = std::min(budget, n);
  if (n == 0 || b <= 0) return result;

  double d_max = pool_d_max(records, params.d0);
  std::vector<Unit> units;
  units.reserve(static_cast<std::size_t>(n));
  for (const auto& r : records) units.push_back(unit_from_records({&r}, labeled_hist, params, d_max));
  for (const Unit& u : units) result.scores[u.id] = u.stage_c;

  std::vector<std::size_t> c_survivors, r_survivors;
  std::vector<std::size_t> picked =
      crb_pipeline(units, b, params, false, &c_survivors, &r_survivors);
  if (trace) {
    for (const Unit& u : units) trace->pool_ids.push_back(u.id);
    for (std::size_t i : c_survivors) trace->k1_ids.push_back(units[i].id);
    for (std::size_t i : r_survivors) trace->k2_ids.push_back(units[i].id);
  }
  for (std::size_t p : picked) result.selected.push_back(units[p].id);
  sort_by_sequence(result.selected, records);
  return result;
}

SelectionResult tcrb_select(const std::vector<FrameScoreRecord>& records,
                            const std::vector<long>& labeled_hist, int budget,
                            int window, const CrbParams& params) {
  SelectionResult result;
  result.strategy = "tcrb";
  const int n = static_cast<int>(records.size());
  if (window < 1) throw ConfigError("tcrb_select: window must be >= 1");
  if (budget < window) throw ConfigError("tcrb_select: budget must be >= window");
  const int b = std::min(budget, n);
  if (n == 0) return result;
  if (b >= n) {
    for (const auto& r : records) result.selected.push_back(r.frame_id);
    sort_by_sequence(result.selected, records);
    return result;
  }

  // Group by sequence, ordered by index.
  std::map<int, std::vector<const FrameScoreRecord*>> by_seq;
  for (const auto& r : records) by_seq[r.sequence_id].push_back(&r);
  for (auto& [seq, list] : by_seq) {
    std::sort(list.begin(), list.end(), [](const auto* a, const auto* b) {
      return a->index_in_sequence < b->index_in_sequence;
    });
  }

  double d_max = pool_d_max(records, params.d0);
  std::vector<Unit> units;
  for (auto& [seq, list] : by_seq) {
    for (std::size_t start = 0; start + static_cast<std::size_t>(window) <= list.size();
         ++start) {
      // windows must be index-contiguous within the sequence
      bool contiguous = true;
      for (int k = 1; k < window; ++k) {
        if (list[start + static_cast<std::size_t>(k)]->index_in_sequence !=
            list[start]->index_in_sequence + k) {
          contiguous = false;
          break;
        }
      }
      if (!contiguous) continue;
      std::vector<const FrameScoreRecord*> members(
          list.begin() + static_cast<long>(start),
          list.begin() + static_cast<long>(start) + window);
      units.push_back(unit_from_records(members, labeled_hist, params, d_max));
    }
  }
  if (units.empty()) throw DataError("tcrb_select: no sequence has >= window frames");

  int window_budget = b / window;
  std::vector<std::size_t> picked = crb_pipeline(units, window_budget, params, true);

  std::set<int> chosen;
  for (std::size_t p : picked) {
    for (int fid : units[p].frame_ids) chosen.insert(fid);
    result.scores[units[p].id] = units[p].stage_c;
  }

  // Fill the remainder with per-frame CRB over the leftover pool.
  int remainder = b - static_cast<int>(chosen.size());
  if (remainder > 0) {
    std::vector<FrameScoreRecord> leftovers;
    for (const auto& r : records)
      if (!chosen.count(r.frame_id)) leftovers.push_back(r);
    SelectionResult fill = crb_select(leftovers, labeled_hist, remainder, params);
    for (int fid : fill.selected) chosen.insert(fid);
  }

  result.selected.assign(chosen.begin(), chosen.end());
  sort_by_sequence(result.selected, records);
  return result;
}

SelectionResult random_select(const std::vector<int>& pool_ids, int budget,
                              std::uint64_t seed) {
  if (budget < 1) throw ConfigError("random_select: budget must be >= 1");
  SelectionResult result;
  result.strategy = "random";
  std::vector<int> ids = pool_ids;
  std::sort(ids.begin(), ids.end());  // seed-to-sample mapping is pool-order free
  Rng rng(hash_combine(seed, hash_string("random_select")));
  rng.shuffle(ids);
  const int b = std::min<int>(budget, static_cast<int>(ids.size()));
  result.selected.assign(ids.begin(), ids.begin() + b);
  for (int i = 0; i < b; ++i)
    result.scores[result.selected[static_cast<std::size_t>(i)]] = 0.0;
  return result;
}

SelectionResult select(const std::string& strategy,
                       const std::vector<FrameScoreRecord>& records,
                       const LabeledContext& labeled, int budget,
                       const SelectParams& params) {
  if (!is_valid_strategy(strategy))
    throw ConfigError("unknown strategy: " + strategy);
  if (budget < 1) throw ConfigError("select: budget must be >= 1");

  if (strategy == "random") {
    std::vector<int> ids;
    for (const auto& r : records) ids.push_back(r.frame_id);
    SelectionResult res = random_select(ids, budget, params.seed);
    return res;
  }
  if (strategy == "coreset") return coreset_select(records, labeled.embeddings, budget);
  if (strategy == "badge") return badge_select(records, budget, params.seed);
  if (strategy == "crb") return crb_select(records, labeled.class_hist, budget, params.crb);
  if (strategy == "tcrb")
    return tcrb_select(records, labeled.class_hist, budget, params.tcrb_window, params.crb);

  // Scalar-scored strategies.
  SelectionResult result;
  result.strategy = strategy;
  std::vector<std::pair<int, double>> scored;
  for (const auto& r : records) {
    double s = 0.0;
    if (strategy == "entropy") s = entropy_score(r, params.score);
    else if (strategy == "confidence") s = confidence_score(r, params.score);
    else s = mc_variance_score(r, params.score);
    scored.emplace_back(r.frame_id, s);
    result.scores[r.frame_id] = s;
  }
  result.selected = top_k(scored, std::min<int>(budget, static_cast<int>(records.size())));
  return result;
}

}  // namespace activeloop
