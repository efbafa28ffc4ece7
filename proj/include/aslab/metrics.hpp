#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aslab/core.hpp"
#include "aslab/error.hpp"
#include "aslab/util.hpp"

namespace aslab::metrics {

// ---------------------------------------------------------------------------
// Kaggle-style medals
// ---------------------------------------------------------------------------

enum class Medal { None, Bronze, Silver, Gold };

const char* to_string(Medal m);

// Best rank = 1; a medal is won iff rank <= threshold.
struct MedalThresholds {
  int bronze_rank = 0;
  int silver_rank = 0;
  int gold_rank = 0;
};

// Band table:
//   0-99 teams:    bronze top 40%, silver top 20%, gold top 10%
//   100-249:       bronze top 40%, silver top 20%, gold top 10 (absolute)
//   250-999:       bronze top 100, silver top 50,  gold top 10 + 0.2%
//   1000+:         bronze top 10%, silver top 5%,  gold top 10 + 0.2%
// Fractional thresholds floor.
MedalThresholds medal_thresholds(int n_teams);

// 1 + number of human scores strictly better than raw (ties favor the agent).
int rank_against(double raw_score, const core::Leaderboard& lb, bool higher_is_better);

Medal award_medal(double raw_score, const core::Leaderboard& lb, bool higher_is_better);

// Linear map of raw onto [worst human, best human] -> [0, 1]; clamped below
// at 0, values above 1 permitted.
double normalized_score(double raw_score, const core::Leaderboard& lb, bool higher_is_better);

// 100 * (#humans strictly worse) / n_teams.
double percentile(double raw_score, const core::Leaderboard& lb, bool higher_is_better);

// ---------------------------------------------------------------------------
// Attempts
// ---------------------------------------------------------------------------

// One agent attempt at one (task, seed). Invalid attempts carry medal None,
// normalized score 0 and percentile 0, and are included in every aggregate.
struct AttemptResult {
  std::string agent;
  std::string task_id;
  uint64_t seed = 0;
  bool valid = false;
  std::optional<double> raw_score;
  Medal medal = Medal::None;
  double normalized = 0.0;
  double percentile = 0.0;
};

AttemptResult grade_attempt(const std::string& agent, const core::TaskSpec& task,
                            uint64_t seed, std::optional<double> raw_score);

double medal_rate(const std::vector<AttemptResult>& attempts);             // percent
double valid_submission_rate(const std::vector<AttemptResult>& attempts);  // percent
double mean_normalized_score(const std::vector<AttemptResult>& attempts);
double mean_percentile(const std::vector<AttemptResult>& attempts);

// ---------------------------------------------------------------------------
// Elo via Bradley-Terry maximum likelihood
// ---------------------------------------------------------------------------

enum class MatchOutcome { AWin, BWin, Tie };

struct MatchRecord {
  std::string agent_a;
  std::string agent_b;
  MatchOutcome outcome = MatchOutcome::Tie;
};

struct EloTable {
  std::map<std::string, double> rating;  // mean anchored at 1500
  std::map<std::string, int> n_matches;
};

inline constexpr double kEloAnchor = 1500.0;

// Expected win probability of the higher-rated side at a given rating gap.
inline double elo_expected_win(double rating_gap) {
  return 1.0 / (1.0 + std::pow(10.0, -rating_gap / 400.0));
}

struct EloOptions {
  // Pseudo-tie mass added to every pair that actually played, keeping the
  // MLE finite on separable data.
  double pseudo_ties = 0.02;
  double gradient_tol = 1e-9;
  int max_iterations = 200000;
};

// Order-independent Bradley-Terry fit (ties count half a win for each side)
// mapped onto the Elo scale. Throws DisconnectedComparisonGraph when some
// agent pair has no comparison path, EmptyInput when no matches.
EloTable elo_ratings(const std::vector<MatchRecord>& matches, const EloOptions& opts = {});

// All pairwise comparisons of attempts per (task, seed): tie on equal scores,
// invalid loses to valid, invalid ties invalid.
std::vector<MatchRecord> build_matches(const std::vector<AttemptResult>& attempts,
                                       const std::map<std::string, bool>& higher_is_better);

struct EloWithCi {
  double rating = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_matches = 0;
};

// Elo point estimates plus stratified-bootstrap CIs. Whole (task, seed)
// groups are resampled within each task stratum so head-to-heads stay paired.
std::map<std::string, EloWithCi> elo_with_ci(const std::vector<AttemptResult>& attempts,
                                             const std::map<std::string, bool>& higher_is_better,
                                             int n_resamples = 2000, double confidence = 0.95,
                                             uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Stratified bootstrap
// ---------------------------------------------------------------------------

// Percentile-interval bootstrap, resampling attempts with replacement within
// each task stratum. The statistic sees the pooled resampled units.
template <class T, class Statistic>
std::pair<double, double> stratified_bootstrap_ci(
    const std::map<std::string, std::vector<T>>& per_task, Statistic&& statistic,
    int n_resamples = 10000, double confidence = 0.95, uint64_t seed = 0) {
  if (per_task.empty()) raise(ErrorCode::EmptyStratum, "no strata");
  for (const auto& [task, units] : per_task) {
    if (units.empty()) raise(ErrorCode::EmptyStratum, "task " + task + " has no attempts");
  }
  if (n_resamples < 1) raise(ErrorCode::EmptyInput, "n_resamples must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0))
    raise(ErrorCode::OutOfRange, "confidence must lie in (0,1)");

  std::vector<const std::vector<T>*> strata;
  strata.reserve(per_task.size());
  for (const auto& [task, units] : per_task) strata.push_back(&units);

  util::Rng rng(util::derive_seed(seed, {"stratified-bootstrap"}));
  std::vector<double> stats(static_cast<size_t>(n_resamples));
  std::vector<const T*> sample;
  for (int r = 0; r < n_resamples; ++r) {
    sample.clear();
    for (const auto* units : strata) {
      const size_t n = units->size();
      for (size_t i = 0; i < n; ++i) {
        sample.push_back(&(*units)[rng.uniform_index(n)]);
      }
    }
    stats[static_cast<size_t>(r)] = statistic(sample);
  }
  std::sort(stats.begin(), stats.end());

  const auto quantile = [&stats](double p) {
    const double h = p * static_cast<double>(stats.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, stats.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return stats[lo] * (1.0 - frac) + stats[hi] * frac;
  };
  const double alpha = 1.0 - confidence;
  return {quantile(alpha / 2.0), quantile(1.0 - alpha / 2.0)};
}

// Groups attempts by task for bootstrap stratification.
std::map<std::string, std::vector<AttemptResult>> group_by_task(
    const std::vector<AttemptResult>& attempts);

// Statistic adapters over resampled attempt pointers.
double medal_rate_of(const std::vector<const AttemptResult*>& sample);
double valid_rate_of(const std::vector<const AttemptResult*>& sample);
double mean_normalized_of(const std::vector<const AttemptResult*>& sample);
double mean_percentile_of(const std::vector<const AttemptResult*>& sample);

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

}  // namespace aslab::metrics
