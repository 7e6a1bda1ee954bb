#ifndef ACTIVELOOP_ALLOOP_HPP
#define ACTIVELOOP_ALLOOP_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "activeloop/acquisition.hpp"
#include "activeloop/evaluation.hpp"

namespace activeloop {

struct PoolState {
  std::set<int> labeled;    // D_L
  std::set<int> unlabeled;  // D_U
  std::vector<std::vector<int>> query_history;  // D_query per completed round
  int round = 0;

  // labeled ∪ unlabeled = dataset, disjoint, history rounds disjoint.
  void check_invariants(std::size_t dataset_size) const;  // throws DataError
};

struct Schedule {
  std::vector<int> cumulative;  // labeled-set size per round, strictly increasing
  int rounds() const { return static_cast<int>(cumulative.size()); }
};

// Cumulative sizes initial, initial+step, ... while <= floor(final_fraction * n).
// Throws ConfigError if no rounds result.
Schedule make_schedule(int dataset_size, int initial_count, int per_round_count,
                       double final_fraction);
// Escape hatch for reproducing externally published round fractions.
Schedule schedule_from_sizes(std::vector<int> cumulative_sizes);

enum class TrainKind { FromScratch, FineTune, IncrementalReplay };

struct TrainStrategy {
  TrainKind kind = TrainKind::FromScratch;
  int epochs_initial = 50;
  int epochs_update = 10;
  double replay_fraction = 0.2;  // rho, share of older labeled frames replayed
};

TrainKind train_kind_from_string(const std::string& name);  // throws ConfigError
std::string to_string(TrainKind kind);

struct CurveRow {
  int round = 0;
  int labeled_count = 0;
  double labeled_fraction = 0.0;  // relative to the train split
  double mAP = 0.0;
  std::vector<double> ap;  // per class
  long train_steps = 0;    // cumulative candidate visits for this strategy
};

struct LearningCurve {
  std::string strategy;
  std::vector<CurveRow> rows;
};

struct DatasetSplits {
  std::vector<Frame> train, val, test;
};

// 80/10/10 by sequence (sequences are never split); sequence assignment is
// shuffled from the master seed so all strategies share one partition.
DatasetSplits split_dataset(const std::vector<Frame>& all, std::uint64_t master_seed);

// Simulated annotator: ground truth is the label. Moves ids from D_U to D_L,
// appends to query_history, and returns the now-labeled frames.
std::vector<Frame> oracle_label(PoolState& state, const std::vector<int>& frame_ids,
                                const std::vector<Frame>& dataset);

struct StrategyRunConfig {
  std::string strategy = "random";
  Schedule schedule;
  TrainStrategy train_strategy;
  std::uint64_t master_seed = 0;    // shared across strategies (split, initial pool)
  std::uint64_t strategy_seed = 0;  // per-strategy streams; defaults to master_seed
  MatchConfig eval_cfg;
  ProposalParams proposal;
  ScoreOptions score;
  CrbParams crb;
  int tcrb_window = 10;
  int mc_passes = 10;
  double mc_drop_rate = 0.3;
  TrainParams base_train;  // epochs field is overridden per TrainStrategy
};

// One strategy's episodic loop over a fixed split. Owns its PoolState and
// ModelState; candidate proposals are model-free and cached per frame.
class ActiveLearner {
 public:
  ActiveLearner(const DatasetSplits* splits, StrategyRunConfig cfg);

  // Uniform seeded sample of the initial labeled pool; depends only on the
  // master seed so concurrent strategies share round 0.
  static std::set<int> initial_pool(const std::vector<Frame>& train, int count,
                                    std::uint64_t master_seed);

  const PoolState& pool() const { return pool_; }
  const ModelState& model() const { return model_; }
  int next_round() const { return next_round_; }

  // Restores a checkpointed state (resume path).
  void restore(PoolState pool, ModelState model, int next_round, long visits);

  // train -> evaluate -> (select + label unless last round). Throws
  // ConfigError once the schedule is exhausted.
  std::pair<CurveRow, SelectionResult> run_round();

  using RoundCallback = std::function<void(const CurveRow&, const SelectionResult&,
                                           const ModelState&, const PoolState&)>;
  LearningCurve run_all(const RoundCallback& callback = nullptr);

  // Score records over the current unlabeled pool (exposed for tests).
  std::vector<FrameScoreRecord> build_records();

 private:
  const std::vector<Candidate>& candidates_for(const Frame& frame);
  std::vector<Frame> frames_by_ids(const std::set<int>& ids) const;
  void train_round(int t);

  const DatasetSplits* splits_;
  StrategyRunConfig cfg_;
  PoolState pool_;
  ModelState model_;
  int next_round_ = 0;
  long total_visits_ = 0;
  int num_classes_ = 0;
  std::map<int, const Frame*> by_id_;
  std::map<int, std::vector<Candidate>> candidate_cache_;
};

}  // namespace activeloop

#endif  // ACTIVELOOP_ALLOOP_HPP
