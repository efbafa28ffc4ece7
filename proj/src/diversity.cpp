#include "aslab/diversity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "aslab/embedded_data.hpp"
#include "aslab/error.hpp"
#include "aslab/util.hpp"

namespace aslab::diversity {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

}  // namespace

const ArchTaxonomy& ArchTaxonomy::builtin() {
  static const ArchTaxonomy instance = ArchTaxonomy::from_json(embedded::kTaxonomyJson);
  return instance;
}

ArchTaxonomy ArchTaxonomy::from_file(const std::string& path) {
  return from_json(util::read_file(path));
}

ArchTaxonomy ArchTaxonomy::from_json(const std::string& text) {
  ArchTaxonomy t;
  const auto j = nlohmann::json::parse(text);
  for (const auto& [family, def] : j.at("families").items()) {
    const std::string approach = def.at("approach").get<std::string>();
    for (const auto& kw : def.at("keywords")) {
      t.add(kw.get<std::string>(), family, approach);
    }
  }
  return t;
}

void ArchTaxonomy::add(std::string keyword, std::string family, std::string approach) {
  TaxonomyEntry e{util::to_lower(keyword), std::move(family), std::move(approach)};
  if (e.keyword.empty()) raise(ErrorCode::EmptyInput, "empty taxonomy keyword");
  entries_.push_back(std::move(e));
  // Longest keyword first so that e.g. "lightgbm" beats "gbm" at the same spot.
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const TaxonomyEntry& a, const TaxonomyEntry& b) {
                     return a.keyword.size() > b.keyword.size();
                   });
}

ArchLabel ArchTaxonomy::extract(const std::string& plan) const {
  const std::string text = util::to_lower(plan);

  struct Match {
    size_t pos;
    size_t len;
    const TaxonomyEntry* entry;
  };
  std::vector<Match> matches;

  for (const auto& entry : entries_) {
    size_t pos = 0;
    while ((pos = text.find(entry.keyword, pos)) != std::string::npos) {
      const size_t end = pos + entry.keyword.size();
      // Word boundary: nothing alphanumeric before; no letter directly after
      // (digits allowed so "resnet50" still reads as ResNet).
      const bool left_ok = pos == 0 || !is_alnum(text[pos - 1]);
      const bool right_ok = end >= text.size() || !is_alpha(text[end]);
      if (left_ok && right_ok) matches.push_back({pos, entry.keyword.size(), &entry});
      pos = end;
    }
  }

  std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
    if (a.pos != b.pos) return a.pos < b.pos;
    return a.len > b.len;
  });

  // Keep non-overlapping matches, longest first at each position.
  std::vector<const TaxonomyEntry*> kept;
  size_t cursor = 0;
  for (const auto& m : matches) {
    if (m.pos < cursor) continue;
    kept.push_back(m.entry);
    cursor = m.pos + m.len;
  }

  if (kept.empty()) return {kApproachOther, kFamilyUnknown};

  std::vector<std::string> distinct_approaches;
  for (const auto* e : kept) {
    if (std::find(distinct_approaches.begin(), distinct_approaches.end(), e->approach) ==
        distinct_approaches.end()) {
      distinct_approaches.push_back(e->approach);
    }
  }

  const std::string& first_family = kept.front()->family;
  if (distinct_approaches.size() >= 2) return {kApproachHybrid, first_family};
  return {distinct_approaches.front(), first_family};
}

std::vector<std::string> ArchTaxonomy::approaches() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (std::find(out.begin(), out.end(), e.approach) == out.end()) out.push_back(e.approach);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string ArchTaxonomy::keyword_for_family(const std::string& family) const {
  const TaxonomyEntry* found = nullptr;
  for (const auto& e : entries_) {
    if (e.family == family && (!found || e.keyword.size() > found->keyword.size())) found = &e;
  }
  return found ? found->keyword : std::string(kFamilyUnknown);
}

double shannon_entropy(const std::map<std::string, int>& histogram) {
  long long total = 0;
  for (const auto& [label, count] : histogram) {
    if (count < 0) raise(ErrorCode::InvariantViolation, "negative count for " + label);
    total += count;
  }
  if (total <= 0) raise(ErrorCode::EmptyHistogram, "histogram has no observations");

  double h = 0.0;
  for (const auto& [label, count] : histogram) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h < 0.0 ? 0.0 : h;
}

std::map<std::string, int> draft_approach_histogram(const core::SolutionTree& tree,
                                                    const ArchTaxonomy& taxonomy) {
  std::map<std::string, int> hist;
  for (const auto& id : tree.root_draft_ids()) {
    const auto label = taxonomy.extract(tree.node(id).plan);
    hist[label.approach] += 1;
  }
  return hist;
}

int tree_level_diversity(const core::SolutionTree& tree, const ArchTaxonomy& taxonomy) {
  if (tree.root_draft_ids().empty()) raise(ErrorCode::EmptyInput, "tree has no drafts");
  return static_cast<int>(draft_approach_histogram(tree, taxonomy).size());
}

std::array<double, 5> distinct_arch_cdf(const std::vector<int>& per_task_counts) {
  if (per_task_counts.empty()) raise(ErrorCode::EmptyInput, "no per-task counts");
  for (int c : per_task_counts) {
    if (c < 1 || c > 5) raise(ErrorCode::OutOfRange, "distinct count outside [1,5]");
  }
  std::array<double, 5> cdf{};
  for (int k = 1; k <= 5; ++k) {
    int n_le = 0;
    for (int c : per_task_counts) {
      if (c <= k) ++n_le;
    }
    cdf[static_cast<size_t>(k - 1)] =
        static_cast<double>(n_le) / static_cast<double>(per_task_counts.size());
  }
  return cdf;
}

double run_entropy(const std::vector<const core::SolutionTree*>& trees,
                   const ArchTaxonomy& taxonomy) {
  std::map<std::string, int> pooled;
  for (const auto* tree : trees) {
    for (const auto& [approach, count] : draft_approach_histogram(*tree, taxonomy)) {
      pooled[approach] += count;
    }
  }
  if (pooled.empty()) raise(ErrorCode::EmptyInput, "no drafts across runs");
  return shannon_entropy(pooled);
}

DiversityProfile profile_tree(const core::SolutionTree& tree, const ArchTaxonomy& taxonomy) {
  DiversityProfile p;
  for (const auto& id : tree.root_draft_ids()) {
    p.per_draft.push_back(taxonomy.extract(tree.node(id).plan));
  }
  p.approach_histogram = draft_approach_histogram(tree, taxonomy);
  p.entropy_bits = p.approach_histogram.empty() ? 0.0 : shannon_entropy(p.approach_histogram);
  p.tree_level_diversity = static_cast<int>(p.approach_histogram.size());
  return p;
}

}  // namespace aslab::diversity
