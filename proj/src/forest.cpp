#include "plus/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "plus/errors.hpp"
#include "plus/parallel.hpp"
#include "plus/text.hpp"

namespace plus {

void TrainingSet::validate() const {
  if (feature_names.empty()) throw DataError("training set has no features");
  if (features.size() != labels.size() * feature_names.size())
    throw DataError("training set feature matrix does not match labels x features");
  if (labels.size() < 2) throw DataError("training set needs at least 2 samples");
  for (double v : features) {
    if (!std::isfinite(v)) throw DataError("training set contains a non-finite feature value");
  }
  for (auto l : labels) {
    if (l > 1) throw DataError("training labels must be 0 or 1");
  }
}

std::size_t TrainingSet::positives() const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

std::uint8_t DecisionTree::predict(std::span<const double> x) const noexcept {
  std::int32_t i = 0;
  for (;;) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return n.vote;
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  std::size_t left_count = 0;  // positions [lo, lo + left_count) of order[feature] go left
  double purity = -1.0;        // sum over children of (n1^2 + n0^2) / n; larger is better
};

// Presorted CART builder. Position p (0..n-1) stands for training row rows[p];
// order[f] holds positions sorted by feature f and is partitioned in place as
// the tree grows, so every node is a contiguous range in every order[f].
class TreeBuilder {
public:
  TreeBuilder(const TrainingSet& data, std::span<const std::int32_t> rows, const TreeParams& params, Rng& rng)
      : data_(data), rows_(rows), params_(params), rng_(rng), features_(data.cols()) {
    const std::size_t n = rows.size();
    label_.resize(n);
    for (std::size_t p = 0; p < n; ++p) label_[p] = data.labels[static_cast<std::size_t>(rows[p])];
    order_.assign(features_, std::vector<std::int32_t>(n));
    for (std::size_t f = 0; f < features_; ++f) {
      auto& ord = order_[f];
      std::iota(ord.begin(), ord.end(), 0);
      std::stable_sort(ord.begin(), ord.end(), [&](std::int32_t a, std::int32_t b) { return value(a, f) < value(b, f); });
    }
    goes_left_.assign(n, 0);
    scratch_.resize(n);
    feature_pool_.resize(features_);
  }

  DecisionTree build() {
    DecisionTree tree;
    if (rows_.empty()) {
      tree.nodes.push_back(TreeNode{});
      return tree;
    }
    struct Task {
      std::size_t lo, hi;
      int depth;
      std::int32_t parent;  // -1 for root or when this is the left child
    };
    std::vector<Task> stack{{0, rows_.size(), 0, -1}};
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      const auto index = static_cast<std::int32_t>(tree.nodes.size());
      if (task.parent >= 0) tree.nodes[static_cast<std::size_t>(task.parent)].right = index;
      tree.nodes.push_back(TreeNode{});

      const std::size_t n = task.hi - task.lo;
      std::size_t ones = 0;
      for (std::size_t i = task.lo; i < task.hi; ++i) ones += label_[static_cast<std::size_t>(order_[0][i])];
      const bool pure = ones == 0 || ones == n;
      const bool depth_capped = params_.max_depth > 0 && task.depth >= params_.max_depth;
      SplitChoice split;
      if (!pure && !depth_capped && n >= static_cast<std::size_t>(std::max(2, params_.min_samples_split))) {
        split = choose_split(task.lo, task.hi);
      }
      if (split.feature < 0) {
        auto& leaf = tree.nodes.back();
        leaf.vote = 2 * ones > n ? 1 : 0;
        continue;
      }
      auto& node = tree.nodes.back();
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = index + 1;
      const std::size_t mid = task.lo + split.left_count;
      partition(task.lo, mid, task.hi, static_cast<std::size_t>(split.feature));
      stack.push_back({mid, task.hi, task.depth + 1, index});
      stack.push_back({task.lo, mid, task.depth + 1, -1});
    }
    return tree;
  }

private:
  double value(std::int32_t pos, std::size_t f) const {
    return data_.at(static_cast<std::size_t>(rows_[static_cast<std::size_t>(pos)]), f);
  }

  SplitChoice choose_split(std::size_t lo, std::size_t hi) {
    std::iota(feature_pool_.begin(), feature_pool_.end(), 0);
    const int mtry = std::clamp(params_.mtry, 1, static_cast<int>(features_));
    int evaluated = 0;
    SplitChoice best;
    // Draw features one at a time until mtry non-constant ones were scanned.
    for (std::size_t k = 0; k < features_ && evaluated < mtry; ++k) {
      const auto j = k + static_cast<std::size_t>(rng_.below(features_ - k));
      std::swap(feature_pool_[k], feature_pool_[j]);
      const std::size_t f = feature_pool_[k];
      const auto& ord = order_[f];
      if (value(ord[lo], f) == value(ord[hi - 1], f)) continue;
      ++evaluated;
      scan_feature(f, lo, hi, best);
    }
    return best;
  }

  void scan_feature(std::size_t f, std::size_t lo, std::size_t hi, SplitChoice& best) const {
    const auto& ord = order_[f];
    const double n = static_cast<double>(hi - lo);
    double total1 = 0;
    for (std::size_t i = lo; i < hi; ++i) total1 += label_[static_cast<std::size_t>(ord[i])];
    double left1 = 0;
    for (std::size_t i = lo; i + 1 < hi; ++i) {
      left1 += label_[static_cast<std::size_t>(ord[i])];
      const double v = value(ord[i], f);
      const double next = value(ord[i + 1], f);
      if (!(v < next)) continue;
      const double nl = static_cast<double>(i + 1 - lo);
      const double nr = n - nl;
      const double l0 = nl - left1;
      const double r1 = total1 - left1;
      const double r0 = nr - r1;
      const double purity = (left1 * left1 + l0 * l0) / nl + (r1 * r1 + r0 * r0) / nr;
      double threshold = v + (next - v) / 2;
      if (!(threshold < next)) threshold = v;
      const int fi = static_cast<int>(f);
      const bool better = purity > best.purity ||
                          (purity == best.purity && (fi < best.feature ||
                                                     (fi == best.feature && threshold < best.threshold)));
      if (better) {
        best.feature = fi;
        best.threshold = threshold;
        best.left_count = i + 1 - lo;
        best.purity = purity;
      }
    }
  }

  void partition(std::size_t lo, std::size_t mid, std::size_t hi, std::size_t split_feature) {
    for (std::size_t i = lo; i < hi; ++i) goes_left_[static_cast<std::size_t>(order_[split_feature][i])] = i < mid;
    for (std::size_t f = 0; f < features_; ++f) {
      if (f == split_feature) continue;
      auto& ord = order_[f];
      std::size_t l = lo, r = 0;
      for (std::size_t i = lo; i < hi; ++i) {
        const auto p = ord[i];
        if (goes_left_[static_cast<std::size_t>(p)]) {
          ord[l++] = p;
        } else {
          scratch_[r++] = p;
        }
      }
      std::copy_n(scratch_.begin(), r, ord.begin() + static_cast<std::ptrdiff_t>(l));
    }
  }

  const TrainingSet& data_;
  std::span<const std::int32_t> rows_;
  TreeParams params_;
  Rng& rng_;
  std::size_t features_;
  std::vector<std::uint8_t> label_;
  std::vector<std::vector<std::int32_t>> order_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::int32_t> scratch_;
  std::vector<std::size_t> feature_pool_;
};

}  // namespace

DecisionTree grow_tree(const TrainingSet& data, std::span<const std::int32_t> rows, const TreeParams& params,
                       Rng& rng) {
  TreeBuilder builder(data, rows, params, rng);
  return builder.build();
}

int default_mtry(std::size_t features) {
  return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(features)))));
}

Forest fit_forest(const TrainingSet& data, const ForestParams& params) {
  data.validate();
  const std::size_t ones = data.positives();
  if (ones == 0 || ones == data.rows()) throw DataError("single-label training set: every label is " + std::to_string(ones ? 1 : 0));
  if (params.trees < 1) throw UsageError("forest needs at least one tree");
  const int f = static_cast<int>(data.cols());
  const int mtry = params.mtry == 0 ? default_mtry(data.cols()) : params.mtry;
  if (mtry < 1 || mtry > f) throw UsageError("mtry " + std::to_string(mtry) + " out of range [1, " + std::to_string(f) + "]");

  Forest forest;
  forest.feature_names = data.feature_names;
  forest.mtry = mtry;
  forest.rng_seed = params.seed;
  forest.trees.resize(static_cast<std::size_t>(params.trees));
  const TreeParams tree_params{mtry, params.max_depth, params.min_samples_split};
  const std::size_t n = data.rows();

  parallel_for(forest.trees.size(), params.threads, 1, [&](std::size_t begin, std::size_t end) {
    std::vector<std::int32_t> bag(n);
    std::vector<std::uint8_t> drawn(n);
    for (std::size_t t = begin; t < end; ++t) {
      Rng rng(derive_seed(params.seed, "tree", t));
      std::fill(drawn.begin(), drawn.end(), 0);
      for (auto& b : bag) {
        b = static_cast<std::int32_t>(rng.below(n));
        drawn[static_cast<std::size_t>(b)] = 1;
      }
      DecisionTree tree = grow_tree(data, bag, tree_params, rng);
      for (std::size_t i = 0; i < n; ++i) {
        if (!drawn[i]) tree.oob_indices.push_back(static_cast<std::int32_t>(i));
      }
      forest.trees[t] = std::move(tree);
    }
  });
  return forest;
}

int count_votes(const Forest& forest, std::span<const double> x) noexcept {
  int votes = 0;
  for (const auto& t : forest.trees) votes += t.predict(x);
  return votes;
}

double predict_proba(const Forest& forest, std::span<const double> x) {
  if (x.size() != forest.feature_count()) {
    throw DataError("feature vector has " + std::to_string(x.size()) + " components, forest expects " +
                    std::to_string(forest.feature_count()));
  }
  return static_cast<double>(count_votes(forest, x)) / static_cast<double>(forest.trees.size());
}

Importance variable_importance(const Forest& forest, const TrainingSet& data, int threads) {
  data.validate();
  const std::size_t f = data.cols();
  if (f != forest.feature_count()) throw DataError("training set does not match the forest's feature count");
  const std::size_t m = forest.trees.size();
  // per-tree (baseline error, per-feature permuted error), filled by index
  std::vector<std::vector<double>> delta(m);
  parallel_for(m, threads, 1, [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(f);
    std::vector<std::int32_t> perm;
    for (std::size_t t = begin; t < end; ++t) {
      const auto& tree = forest.trees[t];
      const auto& oob = tree.oob_indices;
      if (oob.empty()) continue;
      for (auto r : oob) {
        if (static_cast<std::size_t>(r) >= data.rows()) throw DataError("OOB index outside the training set");
      }
      const double size = static_cast<double>(oob.size());
      std::size_t base_errors = 0;
      for (auto r : oob) base_errors += tree.predict(data.row(static_cast<std::size_t>(r))) != data.labels[static_cast<std::size_t>(r)];
      const double base = static_cast<double>(base_errors) / size;
      auto& out = delta[t];
      out.resize(f);
      for (std::size_t j = 0; j < f; ++j) {
        Rng rng(combine(derive_seed(forest.rng_seed, "importance", t), j));
        perm.assign(oob.begin(), oob.end());
        rng.shuffle(std::span<std::int32_t>(perm));
        std::size_t errors = 0;
        for (std::size_t q = 0; q < oob.size(); ++q) {
          const auto r = static_cast<std::size_t>(oob[q]);
          const auto row = data.row(r);
          std::copy(row.begin(), row.end(), x.begin());
          x[j] = data.at(static_cast<std::size_t>(perm[q]), j);
          errors += tree.predict(x) != data.labels[r];
        }
        out[j] = static_cast<double>(errors) / size - base;
      }
    }
  });
  Importance imp;
  imp.raw.assign(f, 0.0);
  std::size_t used = 0;
  for (const auto& d : delta) {
    if (d.empty()) continue;
    ++used;
    for (std::size_t j = 0; j < f; ++j) imp.raw[j] += d[j];
  }
  if (used == 0) throw DataError("no tree has out-of-bag samples; importance is undefined");
  for (auto& v : imp.raw) v /= static_cast<double>(used);
  double positive = 0.0;
  for (double v : imp.raw) positive += v > 0 ? v : 0.0;
  imp.normalized.assign(f, 0.0);
  if (positive > 0) {
    for (std::size_t j = 0; j < f; ++j) imp.normalized[j] = imp.raw[j] > 0 ? imp.raw[j] / positive : 0.0;
  }
  return imp;
}

void write_forest(const Forest& forest, std::ostream& out) {
  out << "plus-forest 1\n";
  out << "trees " << forest.trees.size() << " mtry " << forest.mtry << " seed " << forest.rng_seed << "\n";
  out << "features " << forest.feature_names.size();
  for (const auto& n : forest.feature_names) out << ' ' << n;
  out << "\n";
  for (const auto& tree : forest.trees) {
    out << "tree " << tree.nodes.size() << "\n";
    for (const auto& n : tree.nodes) {
      if (n.is_leaf()) {
        out << "L " << int{n.vote} << "\n";
      } else {
        out << "S " << n.feature << ' ' << format_double(n.threshold) << "\n";
      }
    }
  }
}

namespace {

std::int32_t read_subtree(std::istream& in, DecisionTree& tree, std::size_t remaining_limit) {
  if (tree.nodes.size() >= remaining_limit) throw DataError("forest file: tree has more nodes than declared");
  std::string tag;
  if (!(in >> tag)) throw DataError("forest file: truncated tree");
  const auto index = static_cast<std::int32_t>(tree.nodes.size());
  tree.nodes.push_back(TreeNode{});
  if (tag == "L") {
    int vote = -1;
    if (!(in >> vote) || (vote != 0 && vote != 1)) throw DataError("forest file: bad leaf vote");
    tree.nodes.back().vote = static_cast<std::uint8_t>(vote);
    return index;
  }
  if (tag != "S") throw DataError("forest file: unknown node tag '" + tag + "'");
  std::int32_t feature = -1;
  std::string thr;
  if (!(in >> feature >> thr) || feature < 0) throw DataError("forest file: bad split node");
  const auto t = parse_double(thr);
  if (!t) throw DataError("forest file: bad threshold '" + thr + "'");
  tree.nodes.back().feature = feature;
  tree.nodes.back().threshold = *t;
  const auto left = read_subtree(in, tree, remaining_limit);
  tree.nodes[static_cast<std::size_t>(index)].left = left;
  const auto right = read_subtree(in, tree, remaining_limit);
  tree.nodes[static_cast<std::size_t>(index)].right = right;
  return index;
}

void expect(std::istream& in, const std::string& word) {
  std::string w;
  if (!(in >> w) || w != word) throw DataError("forest file: expected '" + word + "'");
}

}  // namespace

Forest read_forest(std::istream& in) {
  expect(in, "plus-forest");
  int version = 0;
  if (!(in >> version) || version != 1) throw DataError("forest file: unsupported version");
  Forest forest;
  std::size_t trees = 0, features = 0;
  expect(in, "trees");
  in >> trees;
  expect(in, "mtry");
  in >> forest.mtry;
  expect(in, "seed");
  in >> forest.rng_seed;
  expect(in, "features");
  in >> features;
  if (!in || trees == 0) throw DataError("forest file: bad header");
  forest.feature_names.resize(features);
  for (auto& n : forest.feature_names) in >> n;
  forest.trees.resize(trees);
  for (auto& tree : forest.trees) {
    expect(in, "tree");
    std::size_t count = 0;
    if (!(in >> count) || count == 0) throw DataError("forest file: bad node count");
    read_subtree(in, tree, count);
    if (tree.nodes.size() != count) throw DataError("forest file: node count mismatch");
    for (const auto& n : tree.nodes) {
      if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= features)
        throw DataError("forest file: split on unknown feature");
    }
  }
  return forest;
}

void save_forest(const Forest& forest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_forest(forest, out);
}

Forest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open forest file " + path.string());
  return read_forest(in);
}

}  // namespace plus
