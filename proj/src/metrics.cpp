#include "aslab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace aslab::metrics {

const char* to_string(Medal m) {
  switch (m) {
    case Medal::None: return "None";
    case Medal::Bronze: return "Bronze";
    case Medal::Silver: return "Silver";
    case Medal::Gold: return "Gold";
  }
  return "?";
}

MedalThresholds medal_thresholds(int n_teams) {
  if (n_teams < 1) raise(ErrorCode::NonPositiveTeams, "n_teams must be >= 1");
  const double n = static_cast<double>(n_teams);
  MedalThresholds t;
  if (n_teams <= 99) {
    t.bronze_rank = static_cast<int>(std::floor(0.4 * n));
    t.silver_rank = static_cast<int>(std::floor(0.2 * n));
    t.gold_rank = static_cast<int>(std::floor(0.1 * n));
  } else if (n_teams <= 249) {
    t.bronze_rank = static_cast<int>(std::floor(0.4 * n));
    t.silver_rank = static_cast<int>(std::floor(0.2 * n));
    t.gold_rank = 10;
  } else if (n_teams <= 999) {
    t.bronze_rank = 100;
    t.silver_rank = 50;
    t.gold_rank = 10 + static_cast<int>(std::floor(0.002 * n));
  } else {
    t.bronze_rank = static_cast<int>(std::floor(0.1 * n));
    t.silver_rank = static_cast<int>(std::floor(0.05 * n));
    t.gold_rank = 10 + static_cast<int>(std::floor(0.002 * n));
  }
  return t;
}

int rank_against(double raw_score, const core::Leaderboard& lb, bool higher_is_better) {
  int strictly_better = 0;
  for (double h : lb.scores) {
    if (higher_is_better ? h > raw_score : h < raw_score) ++strictly_better;
  }
  return 1 + strictly_better;
}

Medal award_medal(double raw_score, const core::Leaderboard& lb, bool higher_is_better) {
  if (lb.empty()) return Medal::None;
  const MedalThresholds t = medal_thresholds(lb.n_teams());
  const int rank = rank_against(raw_score, lb, higher_is_better);
  if (rank <= t.gold_rank) return Medal::Gold;
  if (rank <= t.silver_rank) return Medal::Silver;
  if (rank <= t.bronze_rank) return Medal::Bronze;
  return Medal::None;
}

double normalized_score(double raw_score, const core::Leaderboard& lb, bool higher_is_better) {
  if (lb.n_teams() < 2) raise(ErrorCode::DegenerateLeaderboard, "need >= 2 human scores");
  const auto [mn, mx] = std::minmax_element(lb.scores.begin(), lb.scores.end());
  if (*mn == *mx) raise(ErrorCode::DegenerateLeaderboard, "all human scores equal");
  const double best = higher_is_better ? *mx : *mn;
  const double worst = higher_is_better ? *mn : *mx;
  const double value = (raw_score - worst) / (best - worst);
  return value < 0.0 ? 0.0 : value;
}

double percentile(double raw_score, const core::Leaderboard& lb, bool higher_is_better) {
  if (lb.empty()) raise(ErrorCode::EmptyInput, "empty leaderboard");
  int strictly_worse = 0;
  for (double h : lb.scores) {
    if (higher_is_better ? h < raw_score : h > raw_score) ++strictly_worse;
  }
  return 100.0 * static_cast<double>(strictly_worse) / static_cast<double>(lb.n_teams());
}

AttemptResult grade_attempt(const std::string& agent, const core::TaskSpec& task,
                            uint64_t seed, std::optional<double> raw_score) {
  AttemptResult a;
  a.agent = agent;
  a.task_id = task.task_id;
  a.seed = seed;
  a.valid = raw_score.has_value();
  a.raw_score = raw_score;
  if (raw_score) {
    a.medal = award_medal(*raw_score, task.leaderboard, task.higher_is_better);
    a.normalized = normalized_score(*raw_score, task.leaderboard, task.higher_is_better);
    a.percentile = percentile(*raw_score, task.leaderboard, task.higher_is_better);
  }
  return a;
}

namespace {

template <class F>
double mean_over(const std::vector<AttemptResult>& attempts, F&& f) {
  if (attempts.empty()) raise(ErrorCode::EmptyInput, "no attempts");
  double sum = 0.0;
  for (const auto& a : attempts) sum += f(a);
  return sum / static_cast<double>(attempts.size());
}

}  // namespace

double medal_rate(const std::vector<AttemptResult>& attempts) {
  return 100.0 * mean_over(attempts, [](const AttemptResult& a) {
    return a.medal != Medal::None ? 1.0 : 0.0;
  });
}

double valid_submission_rate(const std::vector<AttemptResult>& attempts) {
  return 100.0 * mean_over(attempts, [](const AttemptResult& a) { return a.valid ? 1.0 : 0.0; });
}

double mean_normalized_score(const std::vector<AttemptResult>& attempts) {
  return mean_over(attempts, [](const AttemptResult& a) { return a.normalized; });
}

double mean_percentile(const std::vector<AttemptResult>& attempts) {
  return mean_over(attempts, [](const AttemptResult& a) { return a.percentile; });
}

// ---------------------------------------------------------------------------
// Elo
// ---------------------------------------------------------------------------

namespace {

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<size_t>(x)] != x) {
      parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
      x = parent[static_cast<size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) { parent[static_cast<size_t>(find(a))] = find(b); }
};

}  // namespace

EloTable elo_ratings(const std::vector<MatchRecord>& matches, const EloOptions& opts) {
  if (matches.empty()) raise(ErrorCode::EmptyInput, "no matches");

  std::map<std::string, int> idx;
  for (const auto& m : matches) {
    idx.emplace(m.agent_a, 0);
    idx.emplace(m.agent_b, 0);
  }
  int next = 0;
  for (auto& [name, i] : idx) i = next++;
  const size_t n = idx.size();
  if (n < 2) raise(ErrorCode::InsufficientData, "need at least two agents");

  // wins[i][j]: win mass of i over j (ties half each); games[i][j] symmetric.
  std::vector<std::vector<double>> wins(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> games(n, std::vector<double>(n, 0.0));
  std::vector<int> match_count(n, 0);
  DisjointSet ds(n);

  for (const auto& m : matches) {
    const int a = idx.at(m.agent_a);
    const int b = idx.at(m.agent_b);
    if (a == b) continue;
    const size_t ua = static_cast<size_t>(a), ub = static_cast<size_t>(b);
    games[ua][ub] += 1.0;
    games[ub][ua] += 1.0;
    switch (m.outcome) {
      case MatchOutcome::AWin: wins[ua][ub] += 1.0; break;
      case MatchOutcome::BWin: wins[ub][ua] += 1.0; break;
      case MatchOutcome::Tie:
        wins[ua][ub] += 0.5;
        wins[ub][ua] += 0.5;
        break;
    }
    match_count[ua] += 1;
    match_count[ub] += 1;
    ds.unite(a, b);
  }

  const int root = ds.find(0);
  for (size_t i = 1; i < n; ++i) {
    if (ds.find(static_cast<int>(i)) != root)
      raise(ErrorCode::DisconnectedComparisonGraph,
            "comparison graph does not connect all agents");
  }

  // Regularize pairs that actually played so separable data stays finite.
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (games[i][j] > 0.0) {
        games[i][j] += opts.pseudo_ties;
        games[j][i] += opts.pseudo_ties;
        wins[i][j] += opts.pseudo_ties / 2.0;
        wins[j][i] += opts.pseudo_ties / 2.0;
      }
    }
  }

  std::vector<double> win_total(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) win_total[i] += wins[i][j];
  }

  // Minorization-maximization fixed point (Zermelo/Ford).
  std::vector<double> strength(n, 1.0);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    double max_grad = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double expected = 0.0;
      for (size_t j = 0; j < n; ++j) {
        if (games[i][j] > 0.0)
          expected += games[i][j] * strength[i] / (strength[i] + strength[j]);
      }
      max_grad = std::max(max_grad, std::abs(win_total[i] - expected));
    }
    if (max_grad < opts.gradient_tol) break;

    std::vector<double> updated(n);
    for (size_t i = 0; i < n; ++i) {
      double denom = 0.0;
      for (size_t j = 0; j < n; ++j) {
        if (games[i][j] > 0.0) denom += games[i][j] / (strength[i] + strength[j]);
      }
      updated[i] = denom > 0.0 ? win_total[i] / denom : strength[i];
    }
    // Normalize by geometric mean to pin the gauge during iteration.
    double log_sum = 0.0;
    for (double s : updated) log_sum += std::log(s);
    const double gm = std::exp(log_sum / static_cast<double>(n));
    for (auto& s : updated) s /= gm;
    strength = std::move(updated);
  }

  EloTable table;
  double mean = 0.0;
  std::vector<double> raw(n);
  for (size_t i = 0; i < n; ++i) {
    raw[i] = 400.0 * std::log10(strength[i]);
    mean += raw[i];
  }
  mean /= static_cast<double>(n);
  for (const auto& [name, i] : idx) {
    table.rating[name] = kEloAnchor + raw[static_cast<size_t>(i)] - mean;
    table.n_matches[name] = match_count[static_cast<size_t>(i)];
  }
  return table;
}

std::vector<MatchRecord> build_matches(const std::vector<AttemptResult>& attempts,
                                       const std::map<std::string, bool>& higher_is_better) {
  // Group by (task, seed), then compare every agent pair inside each group.
  std::map<std::pair<std::string, uint64_t>, std::vector<const AttemptResult*>> groups;
  for (const auto& a : attempts) groups[{a.task_id, a.seed}].push_back(&a);

  std::vector<MatchRecord> out;
  for (auto& [key, group] : groups) {
    std::sort(group.begin(), group.end(),
              [](const AttemptResult* a, const AttemptResult* b) { return a->agent < b->agent; });
    const auto hib_it = higher_is_better.find(key.first);
    const bool hib = hib_it == higher_is_better.end() ? true : hib_it->second;
    for (size_t i = 0; i < group.size(); ++i) {
      for (size_t j = i + 1; j < group.size(); ++j) {
        const AttemptResult& a = *group[i];
        const AttemptResult& b = *group[j];
        if (a.agent == b.agent) continue;
        MatchRecord m{a.agent, b.agent, MatchOutcome::Tie};
        if (a.valid && !b.valid) {
          m.outcome = MatchOutcome::AWin;
        } else if (!a.valid && b.valid) {
          m.outcome = MatchOutcome::BWin;
        } else if (a.valid && b.valid) {
          if (*a.raw_score == *b.raw_score) m.outcome = MatchOutcome::Tie;
          else if (hib ? *a.raw_score > *b.raw_score : *a.raw_score < *b.raw_score)
            m.outcome = MatchOutcome::AWin;
          else m.outcome = MatchOutcome::BWin;
        }
        out.push_back(std::move(m));
      }
    }
  }
  return out;
}

std::map<std::string, EloWithCi> elo_with_ci(const std::vector<AttemptResult>& attempts,
                                             const std::map<std::string, bool>& higher_is_better,
                                             int n_resamples, double confidence,
                                             uint64_t seed) {
  const EloTable table = elo_ratings(build_matches(attempts, higher_is_better));

  // task -> list of (task, seed) groups.
  std::map<std::pair<std::string, uint64_t>, std::vector<AttemptResult>> groups;
  for (const auto& a : attempts) groups[{a.task_id, a.seed}].push_back(a);
  std::map<std::string, std::vector<const std::vector<AttemptResult>*>> task_groups;
  for (const auto& [key, group] : groups) task_groups[key.first].push_back(&group);

  std::map<std::string, std::vector<double>> samples;
  util::Rng rng(util::derive_seed(seed, {"elo-bootstrap"}));
  for (int r = 0; r < n_resamples; ++r) {
    std::vector<AttemptResult> resampled;
    for (const auto& [task, list] : task_groups) {
      for (size_t i = 0; i < list.size(); ++i) {
        const auto& group = *list[rng.uniform_index(list.size())];
        resampled.insert(resampled.end(), group.begin(), group.end());
      }
    }
    try {
      const EloTable t = elo_ratings(build_matches(resampled, higher_is_better));
      for (const auto& [agent, rating] : t.rating) samples[agent].push_back(rating);
    } catch (const Error&) {
      // A resample can disconnect the comparison graph; skip it.
    }
  }

  std::map<std::string, EloWithCi> out;
  for (const auto& [agent, rating] : table.rating) {
    EloWithCi e;
    e.rating = rating;
    e.n_matches = table.n_matches.at(agent);
    e.ci_low = e.ci_high = rating;
    auto& s = samples[agent];
    if (!s.empty()) {
      std::sort(s.begin(), s.end());
      const auto quant = [&s](double p) {
        const double h = p * static_cast<double>(s.size() - 1);
        const size_t lo = static_cast<size_t>(std::floor(h));
        const size_t hi = std::min(lo + 1, s.size() - 1);
        const double frac = h - static_cast<double>(lo);
        return s[lo] * (1.0 - frac) + s[hi] * frac;
      };
      const double alpha = 1.0 - confidence;
      e.ci_low = quant(alpha / 2.0);
      e.ci_high = quant(1.0 - alpha / 2.0);
    }
    out[agent] = e;
  }
  return out;
}

std::map<std::string, std::vector<AttemptResult>> group_by_task(
    const std::vector<AttemptResult>& attempts) {
  std::map<std::string, std::vector<AttemptResult>> out;
  for (const auto& a : attempts) out[a.task_id].push_back(a);
  return out;
}

double medal_rate_of(const std::vector<const AttemptResult*>& sample) {
  if (sample.empty()) return 0.0;
  double sum = 0.0;
  for (const auto* a : sample) sum += a->medal != Medal::None ? 1.0 : 0.0;
  return 100.0 * sum / static_cast<double>(sample.size());
}

double valid_rate_of(const std::vector<const AttemptResult*>& sample) {
  if (sample.empty()) return 0.0;
  double sum = 0.0;
  for (const auto* a : sample) sum += a->valid ? 1.0 : 0.0;
  return 100.0 * sum / static_cast<double>(sample.size());
}

double mean_normalized_of(const std::vector<const AttemptResult*>& sample) {
  if (sample.empty()) return 0.0;
  double sum = 0.0;
  for (const auto* a : sample) sum += a->normalized;
  return sum / static_cast<double>(sample.size());
}

double mean_percentile_of(const std::vector<const AttemptResult*>& sample) {
  if (sample.empty()) return 0.0;
  double sum = 0.0;
  for (const auto* a : sample) sum += a->percentile;
  return sum / static_cast<double>(sample.size());
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) raise(ErrorCode::InsufficientData, "length mismatch");
  const size_t n = xs.size();
  if (n < 3) raise(ErrorCode::InsufficientData, "need at least 3 points");

  double mean_x = 0.0, mean_y = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mean_x;
    const double dy = ys[i] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) raise(ErrorCode::ZeroVariance, "constant input series");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace aslab::metrics
