#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "aslab/core.hpp"

namespace aslab::diversity {

struct TaxonomyEntry {
  std::string keyword;   // lowercase match key
  std::string family;    // e.g. "EfficientNet"
  std::string approach;  // e.g. "CNN"
};

struct ArchLabel {
  std::string approach;
  std::string family;

  friend bool operator==(const ArchLabel&, const ArchLabel&) = default;
};

inline constexpr const char* kApproachHybrid = "Hybrid";
inline constexpr const char* kApproachOther = "Other";
inline constexpr const char* kFamilyUnknown = "unknown";

// Keyword taxonomy mapping model mentions to (family, approach). Lookups are
// case-insensitive; longer keywords win at the same position.
class ArchTaxonomy {
 public:
  static const ArchTaxonomy& builtin();
  static ArchTaxonomy from_json(const std::string& text);
  static ArchTaxonomy from_file(const std::string& path);

  void add(std::string keyword, std::string family, std::string approach);

  // Keyword scan over a draft plan. Two or more distinct approaches yield
  // (Hybrid, first-mentioned family); no match yields (Other, "unknown").
  ArchLabel extract(const std::string& plan) const;

  const std::vector<TaxonomyEntry>& entries() const { return entries_; }
  std::vector<std::string> approaches() const;
  // First keyword registered for a family (used to render synthetic plans).
  std::string keyword_for_family(const std::string& family) const;

 private:
  std::vector<TaxonomyEntry> entries_;  // sorted by keyword length desc
};

// Shannon entropy in bits of a categorical count histogram.
double shannon_entropy(const std::map<std::string, int>& histogram);

// Approach histogram over the tree's draft nodes.
std::map<std::string, int> draft_approach_histogram(const core::SolutionTree& tree,
                                                    const ArchTaxonomy& taxonomy);

// Count of distinct approaches among the tree's root drafts.
int tree_level_diversity(const core::SolutionTree& tree, const ArchTaxonomy& taxonomy);

// CDF(k) = fraction of tasks using no more than k distinct architectures,
// for k in 1..5. Input counts must lie in [1,5].
std::array<double, 5> distinct_arch_cdf(const std::vector<int>& per_task_counts);

// Entropy of the pooled draft-approach histogram over all trees of one
// (agent, seed) run.
double run_entropy(const std::vector<const core::SolutionTree*>& trees,
                   const ArchTaxonomy& taxonomy);

struct DiversityProfile {
  std::vector<ArchLabel> per_draft;
  std::map<std::string, int> approach_histogram;
  double entropy_bits = 0.0;
  int tree_level_diversity = 0;
};

DiversityProfile profile_tree(const core::SolutionTree& tree, const ArchTaxonomy& taxonomy);

}  // namespace aslab::diversity
