#ifndef ACTIVELOOP_ACQUISITION_HPP
#define ACTIVELOOP_ACQUISITION_HPP

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "activeloop/surrogate.hpp"

namespace activeloop {

// Per-frame bridge between detector output and the query strategies.
struct FrameScoreRecord {
  int frame_id = 0;
  int sequence_id = 0;
  int index_in_sequence = 0;
  std::vector<Detection> detections;
  Eigen::VectorXd frame_embedding;       // mean of detection features
  Eigen::VectorXd frame_grad_embedding;  // mean of gradient embeddings
  // pass_probs[i][p] = probs of detection i on stochastic pass p;
  // only filled when the Monte-Carlo strategy was requested.
  std::vector<std::vector<Eigen::VectorXd>> pass_probs;
  bool has_passes = false;
};

FrameScoreRecord make_record(const Frame& frame, std::vector<Detection> dets,
                             int embedding_dim, int grad_dim);

struct SelectionResult {
  std::string strategy;
  int round = 0;
  std::vector<int> selected;            // ordered, size min(b, pool)
  std::map<int, double> scores;         // frame_id -> diagnostic score
};

enum class Aggregation { Mean, Sum, Max };

struct ScoreOptions {
  Aggregation aggregation = Aggregation::Mean;
  bool entropy_foreground_only = false;  // renormalize over foreground classes
};

// Shannon entropy with natural log and the 0·log 0 = 0 convention.
double entropy(const Eigen::VectorXd& probs);

double entropy_score(const FrameScoreRecord& record, const ScoreOptions& opts = {});
double confidence_score(const FrameScoreRecord& record, const ScoreOptions& opts = {});
// Trace of the per-class sample variance across stochastic passes (divisor N-1),
// aggregated over detections. Throws DataError when pass probs are absent.
double mc_variance_score(const FrameScoreRecord& record, const ScoreOptions& opts = {});

// k-center greedy (farthest-first) on frame embeddings.
SelectionResult coreset_select(const std::vector<FrameScoreRecord>& records,
                               const std::vector<Eigen::VectorXd>& labeled_embeddings,
                               int budget);

// k-means++ seeding on gradient embeddings; the b seeds are the batch.
SelectionResult badge_select(const std::vector<FrameScoreRecord>& records, int budget,
                             std::uint64_t seed);

struct CrbParams {
  int k1_factor = 4;   // stage C keeps k1_factor * b
  int k2_factor = 2;   // stage R keeps k2_factor * b
  int bins = 10;       // distance bins for the density signature
  double d0 = 10.0;    // reference distance for the inverse-square normalization
};

// Per-detection normalized density rho = points * max(distance, d0)^2,
// histogrammed into equal-width BEV-distance bins over [0, d_max].
Eigen::VectorXd density_signature(const FrameScoreRecord& record, int bins, double d0,
                                  double d_max);

// Stage B in isolation: greedy pick minimizing KL(add-1-smoothed pooled
// signature || uniform). Exposed for oracle tests on hand-built signatures.
std::vector<int> balance_greedy(const std::vector<Eigen::VectorXd>& signatures,
                                const std::vector<int>& ids, int budget);

// Stage survivors, outermost first: selected ⊆ k2 ⊆ k1 ⊆ pool.
struct CrbStageTrace {
  std::vector<int> pool_ids, k1_ids, k2_ids;
};

SelectionResult crb_select(const std::vector<FrameScoreRecord>& records,
                           const std::vector<long>& labeled_hist, int budget,
                           const CrbParams& params = {},
                           CrbStageTrace* trace = nullptr);

// Temporal CRB over contiguous same-sequence windows (stride 1, non-overlapping
// acceptance); remainder filled by per-frame CRB over leftovers.
SelectionResult tcrb_select(const std::vector<FrameScoreRecord>& records,
                            const std::vector<long>& labeled_hist, int budget,
                            int window = 10, const CrbParams& params = {});

SelectionResult random_select(const std::vector<int>& pool_ids, int budget,
                              std::uint64_t seed);

struct LabeledContext {
  std::vector<Eigen::VectorXd> embeddings;  // labeled frame embeddings (coreset)
  std::vector<long> class_hist;             // labeled GT class counts (CRB)
};

struct SelectParams {
  ScoreOptions score;
  CrbParams crb;
  int tcrb_window = 10;
  std::uint64_t seed = 0;
};

extern const std::vector<std::string> kStrategyNames;
bool is_valid_strategy(const std::string& name);

// Dispatch point: scalar strategies rank descending (ties by smaller
// frame_id); the rest go to their dedicated routine.
SelectionResult select(const std::string& strategy,
                       const std::vector<FrameScoreRecord>& records,
                       const LabeledContext& labeled, int budget,
                       const SelectParams& params = {});

}  // namespace activeloop

#endif  // ACTIVELOOP_ACQUISITION_HPP
