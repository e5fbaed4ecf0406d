#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "plus/rng.hpp"

namespace plus {

/// Binary-labelled samples: row-major N x F features.
struct TrainingSet {
  std::vector<double> features;
  std::vector<std::uint8_t> labels;
  std::vector<std::string> feature_names;

  std::size_t rows() const noexcept { return labels.size(); }
  std::size_t cols() const noexcept { return feature_names.size(); }
  double at(std::size_t row, std::size_t col) const noexcept { return features[row * cols() + col]; }
  std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(features).subspan(r * cols(), cols());
  }

  /// Checks shape, finiteness and 0/1 labels (not label diversity).
  void validate() const;
  std::size_t positives() const noexcept;
};

/// CART node. Leaves have feature == -1 and carry a vote; internal nodes send
/// x[feature] <= threshold to `left`.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint8_t vote = 0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // preorder; nodes[0] is the root
  std::vector<std::int32_t> oob_indices;

  std::uint8_t predict(std::span<const double> x) const noexcept;
  int depth() const;
};

struct TreeParams {
  int mtry = 1;
  int max_depth = 0;  // 0 = unlimited
  int min_samples_split = 2;
};

/// Grows one CART tree on `rows` (indices into data, duplicates allowed)
/// minimizing Gini impurity over mtry random features per split.
DecisionTree grow_tree(const TrainingSet& data, std::span<const std::int32_t> rows, const TreeParams& params,
                       Rng& rng);

struct ForestParams {
  int trees = 50;
  int mtry = 0;  // 0 = ceil(sqrt(F))
  int max_depth = 0;
  int min_samples_split = 2;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct Forest {
  std::vector<DecisionTree> trees;
  std::vector<std::string> feature_names;
  int mtry = 1;
  std::uint64_t rng_seed = 0;

  std::size_t feature_count() const noexcept { return feature_names.size(); }
};

int default_mtry(std::size_t features);

/// Bootstrap-aggregated CART forest. Each tree draws from its own stream
/// derived from (seed, tree index), so results do not depend on `threads`.
Forest fit_forest(const TrainingSet& data, const ForestParams& params);

/// Fraction of trees voting 1.
double predict_proba(const Forest& forest, std::span<const double> x);

/// Number of trees voting 1; no dimension check.
int count_votes(const Forest& forest, std::span<const double> x) noexcept;

struct Importance {
  std::vector<double> raw;         // mean OOB error increase when the feature is permuted
  std::vector<double> normalized;  // share among positive raw values, 0 otherwise
};

/// Out-of-bag permutation importance, averaged over trees with a nonempty
/// OOB set. Permutations are seeded from the forest seed.
Importance variable_importance(const Forest& forest, const TrainingSet& data, int threads = 0);

/// Self-describing text format:
///   plus-forest 1
///   trees <M> mtry <mtry> seed <seed>
///   features <F> <name>...
///   tree <node count>
///   S <feature> <threshold> | L <vote>   (preorder, one node per line)
void write_forest(const Forest& forest, std::ostream& out);
Forest read_forest(std::istream& in);
void save_forest(const Forest& forest, const std::filesystem::path& path);
Forest load_forest(const std::filesystem::path& path);

}  // namespace plus
