#include "activeloop/alloop.hpp"

#include <algorithm>
#include <cmath>

#include "activeloop/common.hpp"

namespace activeloop {

void PoolState::check_invariants(std::size_t dataset_size) const {
  if (labeled.size() + unlabeled.size() != dataset_size)
    throw DataError("PoolState: labeled + unlabeled != dataset size");
  for (int id : labeled) {
    if (unlabeled.count(id)) throw DataError("PoolState: pools are not disjoint");
  }
  std::set<int> seen;
  for (const auto& round : query_history) {
    for (int id : round) {
      if (!seen.insert(id).second)
        throw DataError("PoolState: query_history rounds are not disjoint");
      if (!labeled.count(id))
        throw DataError("PoolState: queried frame missing from labeled pool");
    }
  }
}

Schedule make_schedule(int dataset_size, int initial_count, int per_round_count,
                       double final_fraction) {
  if (dataset_size < 1 || initial_count < 1 || per_round_count < 1 ||
      final_fraction <= 0.0)
    throw ConfigError("make_schedule: arguments must be positive");
  int cap = static_cast<int>(std::floor(final_fraction * dataset_size));
  if (initial_count > cap)
    throw ConfigError("make_schedule: initial_count exceeds the final budget");
  Schedule s;
  for (int size = initial_count; size <= cap; size += per_round_count)
    s.cumulative.push_back(size);
  if (s.cumulative.empty()) throw ConfigError("make_schedule: zero rounds");
  return s;
}

Schedule schedule_from_sizes(std::vector<int> cumulative_sizes) {
  if (cumulative_sizes.empty()) throw ConfigError("schedule: empty size list");
  for (std::size_t i = 0; i < cumulative_sizes.size(); ++i) {
    if (cumulative_sizes[i] < 1 || (i > 0 && cumulative_sizes[i] <= cumulative_sizes[i - 1]))
      throw ConfigError("schedule: cumulative sizes must be strictly increasing");
  }
  Schedule s;
  s.cumulative = std::move(cumulative_sizes);
  return s;
}

TrainKind train_kind_from_string(const std::string& name) {
  if (name == "from_scratch") return TrainKind::FromScratch;
  if (name == "fine_tune") return TrainKind::FineTune;
  if (name == "incremental_replay") return TrainKind::IncrementalReplay;
  throw ConfigError("unknown train strategy: " + name);
}

std::string to_string(TrainKind kind) {
  switch (kind) {
    case TrainKind::FromScratch: return "from_scratch";
    case TrainKind::FineTune: return "fine_tune";
    default: return "incremental_replay";
  }
}

DatasetSplits split_dataset(const std::vector<Frame>& all, std::uint64_t master_seed) {
  std::set<int> seq_set;
  for (const Frame& f : all) seq_set.insert(f.sequence_id);
  std::vector<int> seqs(seq_set.begin(), seq_set.end());
  Rng rng(hash_combine(master_seed, hash_string("split")));
  rng.shuffle(seqs);

  std::size_t n = seqs.size();
  std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.8 * n)));
  std::size_t n_val = n > n_train ? std::max<std::size_t>(n > n_train + 1 ? 1 : 0,
                                                          static_cast<std::size_t>(std::llround(0.1 * n)))
                                  : 0;
  if (n_train + n_val > n) n_val = n - n_train;

  std::set<int> train_seqs(seqs.begin(), seqs.begin() + static_cast<long>(n_train));
  std::set<int> val_seqs(seqs.begin() + static_cast<long>(n_train),
                         seqs.begin() + static_cast<long>(n_train + n_val));

  DatasetSplits splits;
  for (const Frame& f : all) {
    if (train_seqs.count(f.sequence_id)) splits.train.push_back(f);
    else if (val_seqs.count(f.sequence_id)) splits.val.push_back(f);
    else splits.test.push_back(f);
  }
  if (splits.test.empty()) splits.test = splits.train;  // degenerate tiny datasets
  return splits;
}

std::vector<Frame> oracle_label(PoolState& state, const std::vector<int>& frame_ids,
                                const std::vector<Frame>& dataset) {
  std::map<int, const Frame*> by_id;
  for (const Frame& f : dataset) by_id[f.frame_id] = &f;
  std::vector<Frame> labeled;
  for (int id : frame_ids) {
    if (!state.unlabeled.count(id))
      throw DataError("oracle_label: frame " + std::to_string(id) +
                      " is not in the unlabeled pool");
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw DataError("oracle_label: frame " + std::to_string(id) + " not in dataset");
    labeled.push_back(*it->second);
  }
  for (int id : frame_ids) {
    state.unlabeled.erase(id);
    state.labeled.insert(id);
  }
  state.query_history.push_back(frame_ids);
  return labeled;
}

ActiveLearner::ActiveLearner(const DatasetSplits* splits, StrategyRunConfig cfg)
    : splits_(splits), cfg_(std::move(cfg)) {
  if (!is_valid_strategy(cfg_.strategy))
    throw ConfigError("unknown strategy: " + cfg_.strategy);
  if (cfg_.schedule.rounds() < 1) throw ConfigError("empty schedule");
  if (cfg_.strategy_seed == 0) cfg_.strategy_seed = cfg_.master_seed;

  for (const auto* part : {&splits_->train, &splits_->val, &splits_->test}) {
    for (const Frame& f : *part) {
      for (const Box3D& b : f.gt_boxes) num_classes_ = std::max(num_classes_, b.class_id + 1);
    }
  }
  if (num_classes_ < 1) num_classes_ = 1;

  for (const Frame& f : splits_->train) by_id_[f.frame_id] = &f;
  if (cfg_.schedule.cumulative.back() > static_cast<int>(splits_->train.size()))
    throw ConfigError("schedule exceeds the train split size");

  pool_.labeled = initial_pool(splits_->train, cfg_.schedule.cumulative.front(),
                               cfg_.master_seed);
  for (const Frame& f : splits_->train) {
    if (!pool_.labeled.count(f.frame_id)) pool_.unlabeled.insert(f.frame_id);
  }
  model_ = make_model(num_classes_,
                      hash_combine(cfg_.strategy_seed, hash_string(cfg_.strategy),
                                   hash_string("model")));
}

std::set<int> ActiveLearner::initial_pool(const std::vector<Frame>& train, int count,
                                          std::uint64_t master_seed) {
  std::vector<int> ids;
  for (const Frame& f : train) ids.push_back(f.frame_id);
  std::sort(ids.begin(), ids.end());
  Rng rng(hash_combine(master_seed, hash_string("initial_pool")));
  rng.shuffle(ids);
  if (count > static_cast<int>(ids.size()))
    throw ConfigError("initial pool larger than the train split");
  return std::set<int>(ids.begin(), ids.begin() + count);
}

void ActiveLearner::restore(PoolState pool, ModelState model, int next_round,
                            long visits) {
  pool_ = std::move(pool);
  model_ = std::move(model);
  next_round_ = next_round;
  total_visits_ = visits;
}

const std::vector<Candidate>& ActiveLearner::candidates_for(const Frame& frame) {
  auto it = candidate_cache_.find(frame.frame_id);
  if (it == candidate_cache_.end()) {
    it = candidate_cache_.emplace(frame.frame_id, propose(frame, cfg_.proposal)).first;
  }
  return it->second;
}

std::vector<Frame> ActiveLearner::frames_by_ids(const std::set<int>& ids) const {
  std::vector<Frame> out;
  for (int id : ids) out.push_back(*by_id_.at(id));
  return out;
}

void ActiveLearner::train_round(int t) {
  TrainParams tp = cfg_.base_train;
  const TrainStrategy& ts = cfg_.train_strategy;

  std::vector<Frame> training_frames;
  if (t == 0 || ts.kind == TrainKind::FromScratch) {
    tp.epochs = ts.epochs_initial;
    tp.resume = false;
    model_ = make_model(num_classes_,
                        hash_combine(cfg_.strategy_seed, hash_string(cfg_.strategy),
                                     hash_string("model"), static_cast<std::uint64_t>(t)));
    training_frames = frames_by_ids(pool_.labeled);
  } else if (ts.kind == TrainKind::FineTune) {
    tp.epochs = ts.epochs_update;
    tp.resume = true;
    training_frames = frames_by_ids(pool_.labeled);
  } else {  // incremental replay: newest queries plus a rho-sample of the rest
    tp.epochs = ts.epochs_update;
    tp.resume = true;
    std::set<int> newest;
    if (!pool_.query_history.empty()) {
      for (int id : pool_.query_history.back()) newest.insert(id);
    }
    std::vector<int> older;
    for (int id : pool_.labeled) {
      if (!newest.count(id)) older.push_back(id);
    }
    Rng rng(hash_combine(cfg_.strategy_seed, hash_string(cfg_.strategy),
                         hash_string("replay"), static_cast<std::uint64_t>(t)));
    rng.shuffle(older);
    std::size_t keep = static_cast<std::size_t>(
        std::llround(ts.replay_fraction * static_cast<double>(older.size())));
    std::set<int> chosen(newest);
    for (std::size_t i = 0; i < keep && i < older.size(); ++i) chosen.insert(older[i]);
    if (chosen.empty()) chosen = pool_.labeled;
    training_frames = frames_by_ids(chosen);
  }

  long before = model_.train_steps;
  train(model_, training_frames, tp, cfg_.proposal);
  total_visits_ += model_.train_steps - before;
}

std::vector<FrameScoreRecord> ActiveLearner::build_records() {
  const bool want_passes = cfg_.strategy == "montecarlo";
  std::vector<int> ids(pool_.unlabeled.begin(), pool_.unlabeled.end());
  std::vector<FrameScoreRecord> records(ids.size());
  const int grad_dim = (num_classes_ + 1) * (kFeatureDim + 1);
  parallel_for(ids.size(), [&](std::size_t i) {
    const Frame& frame = *by_id_.at(ids[i]);
    const std::vector<Candidate>& cands = candidates_for(frame);
    std::vector<Detection> dets = infer_candidates(model_, cands);
    records[i] = make_record(frame, std::move(dets), kFeatureDim, grad_dim);
    if (want_passes) {
      auto stoch = infer_stochastic_candidates(model_, cands, frame.frame_id,
                                               cfg_.mc_passes, cfg_.mc_drop_rate);
      for (auto& sd : stoch) records[i].pass_probs.push_back(std::move(sd.pass_probs));
      records[i].has_passes = true;
    }
  });
  return records;
}

std::pair<CurveRow, SelectionResult> ActiveLearner::run_round() {
  const int t = next_round_;
  if (t >= cfg_.schedule.rounds())
    throw ConfigError("run_round: budget exhausted (schedule has " +
                      std::to_string(cfg_.schedule.rounds()) + " rounds)");
  if (static_cast<int>(pool_.labeled.size()) != cfg_.schedule.cumulative[static_cast<std::size_t>(t)])
    throw DataError("run_round: labeled pool size does not match the schedule");

  // Proposals are model-free; warm the cache in parallel once.
  {
    std::vector<const Frame*> missing;
    for (const auto& [id, frame] : by_id_) {
      if (!candidate_cache_.count(id)) missing.push_back(frame);
    }
    std::vector<std::vector<Candidate>> proposed(missing.size());
    parallel_for(missing.size(), [&](std::size_t i) {
      proposed[i] = propose(*missing[i], cfg_.proposal);
    });
    for (std::size_t i = 0; i < missing.size(); ++i)
      candidate_cache_.emplace(missing[i]->frame_id, std::move(proposed[i]));
  }

  train_round(t);

  EvalReport report = evaluate(model_, splits_->test, cfg_.eval_cfg, cfg_.proposal);
  CurveRow row;
  row.round = t;
  row.labeled_count = static_cast<int>(pool_.labeled.size());
  row.labeled_fraction =
      static_cast<double>(pool_.labeled.size()) / static_cast<double>(splits_->train.size());
  row.mAP = report.mAP;
  row.ap = report.ap;
  row.train_steps = total_visits_;

  SelectionResult selection;
  if (t + 1 < cfg_.schedule.rounds()) {
    int batch = cfg_.schedule.cumulative[static_cast<std::size_t>(t + 1)] -
                static_cast<int>(pool_.labeled.size());
    std::vector<FrameScoreRecord> records = build_records();

    LabeledContext ctx;
    ctx.class_hist = class_histogram(frames_by_ids(pool_.labeled), num_classes_);
    if (cfg_.strategy == "coreset") {
      for (int id : pool_.labeled) {
        const Frame& frame = *by_id_.at(id);
        std::vector<Detection> dets = infer_candidates(model_, candidates_for(frame));
        ctx.embeddings.push_back(
            make_record(frame, std::move(dets), kFeatureDim,
                        (num_classes_ + 1) * (kFeatureDim + 1))
                .frame_embedding);
      }
    }

    SelectParams sp;
    sp.score = cfg_.score;
    sp.crb = cfg_.crb;
    sp.tcrb_window = cfg_.tcrb_window;
    sp.seed = hash_combine(cfg_.strategy_seed, hash_string(cfg_.strategy),
                           hash_string("select"), static_cast<std::uint64_t>(t));
    selection = select(cfg_.strategy, records, ctx, batch, sp);
    selection.round = t;

    oracle_label(pool_, selection.selected, splits_->train);
  }

  pool_.check_invariants(splits_->train.size());
  pool_.round = t + 1;
  next_round_ = t + 1;
  return {row, selection};
}

LearningCurve ActiveLearner::run_all(const RoundCallback& callback) {
  LearningCurve curve;
  curve.strategy = cfg_.strategy;
  while (next_round_ < cfg_.schedule.rounds()) {
    auto [row, selection] = run_round();
    curve.rows.push_back(row);
    if (callback) callback(row, selection, model_, pool_);
  }
  return curve;
}

}  // namespace activeloop
