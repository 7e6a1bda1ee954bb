#ifndef ACTIVELOOP_IO_HPP
#define ACTIVELOOP_IO_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "activeloop/alloop.hpp"

namespace activeloop {

// ---------------------------------------------------------------------------
// Dataset persistence: <dir>/meta.json plus either frames.jsonl or
// frames/NNNNNN.bin (magic "AAL3", u16 version, length-prefixed f32 arrays).
// ---------------------------------------------------------------------------

enum class DatasetFormat { Jsonl, Binary };

void save_dataset(const std::filesystem::path& dir, const SceneConfig& cfg,
                  const std::vector<Frame>& frames,
                  DatasetFormat format = DatasetFormat::Jsonl);

struct LoadedDataset {
  SceneConfig config;  // echo of the generating config (class table included)
  std::vector<Frame> frames;
};

LoadedDataset load_dataset(const std::filesystem::path& dir);

SceneConfig scene_config_from_json_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Checkpoints (versioned JSON)
// ---------------------------------------------------------------------------

void save_model(const std::filesystem::path& path, const ModelState& model);
ModelState load_model(const std::filesystem::path& path);

struct RunState {
  PoolState pool;
  int next_round = 0;
  long total_visits = 0;
};

void save_run_state(const std::filesystem::path& path, const RunState& state);
RunState load_run_state(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// External inference records (JSON lines, one frame per line). Validation
// failures throw DataError with the offending line number.
// ---------------------------------------------------------------------------

std::vector<FrameScoreRecord> load_inference_records(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// CSV emission: stable-ordered, versioned columns.
//   metrics:  strategy,round,labeled_count,labeled_fraction,mAP,ap_class_*,train_steps
//   manifest: round,rank,frame_id,score
// ---------------------------------------------------------------------------

std::string metrics_header(int num_classes);
std::string metrics_row(const std::string& strategy, const CurveRow& row);
LearningCurve load_metrics_csv(const std::filesystem::path& path);

std::string manifest_header();
void append_manifest_rows(std::ostream& out, const SelectionResult& selection);
std::vector<int> load_manifest_ids(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Experiment configuration (versioned JSON; schema in docs/config_schema.json)
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  // exactly one dataset source
  std::optional<SceneConfig> synthetic;
  std::optional<std::string> dataset_dir;

  std::vector<std::string> strategies;
  // schedule: either derived or explicit cumulative sizes
  int initial_count = 0;
  int per_round_count = 0;
  double final_fraction = 0.0;
  std::vector<int> explicit_sizes;

  TrainStrategy train_strategy;
  TrainParams base_train;
  MatchConfig eval_cfg;
  ProposalParams proposal;
  ScoreOptions score;
  CrbParams crb;
  int tcrb_window = 10;
  int mc_passes = 10;
  double mc_drop_rate = 0.3;

  std::uint64_t seed = 1;
  std::map<std::string, std::uint64_t> per_strategy_seeds;
  std::string out_dir = "runs/out";
};

ExperimentConfig experiment_config_from_json_file(const std::filesystem::path& path);

// Full episodic experiment: one metrics CSV + manifest per strategy,
// per-round checkpoints, resumable. The run directory is lockfile-guarded.
std::vector<LearningCurve> run_experiment(const ExperimentConfig& cfg,
                                          bool resume = false);

// ---------------------------------------------------------------------------
// Reporting: aligned comparison table (+/- deltas vs the baseline column)
// and an SVG learning-curve plot with optional 100% asymptotes.
// ---------------------------------------------------------------------------

struct ReportCurve {
  std::string name;
  std::vector<double> percents;  // labeled fraction in percent
  std::vector<double> values;    // mAP
};

struct Report {
  std::string table;                 // rendered text table
  std::vector<ReportCurve> curves;   // aligned on the shared round axis
  std::map<std::string, double> asymptotes;  // name -> 100% reference value
  bool warned_disjoint = false;
};

Report build_report(const std::vector<std::filesystem::path>& metrics_csvs,
                    const std::optional<std::filesystem::path>& reference_csv);
std::string render_report_svg(const Report& report);

// signed two-decimal delta, "(+3.29)" style
std::string format_delta(double delta);

// Exclusive lockfile; throws DataError when the directory is already locked.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace activeloop

#endif  // ACTIVELOOP_IO_HPP
