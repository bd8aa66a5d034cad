#include "semslam/vocabulary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "semslam/rng.hpp"

namespace semslam {

std::string BinaryDescriptor::to_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(kWords * 16);
  for (int w = 0; w < kWords; ++w) {
    for (int shift = 60; shift >= 0; shift -= 4) {
      out.push_back(digits[(words[w] >> shift) & 0xF]);
    }
  }
  return out;
}

BinaryDescriptor BinaryDescriptor::from_hex(const std::string& hex) {
  if (hex.size() != kWords * 16) {
    throw DataError("descriptor hex string has wrong length");
  }
  BinaryDescriptor d;
  for (int w = 0; w < kWords; ++w) {
    std::uint64_t v = 0;
    for (int i = 0; i < 16; ++i) {
      const char c = hex[w * 16 + i];
      std::uint64_t nibble = 0;
      if (c >= '0' && c <= '9')
        nibble = c - '0';
      else if (c >= 'a' && c <= 'f')
        nibble = 10 + (c - 'a');
      else
        throw DataError("invalid descriptor hex digit");
      v = (v << 4) | nibble;
    }
    d.words[w] = v;
  }
  return d;
}

namespace {

/// Per-bit majority vote over a set of descriptors, ties to 0.
BinaryDescriptor majority_median(const std::vector<BinaryDescriptor>& all,
                                 const std::vector<int>& members) {
  std::array<int, BinaryDescriptor::kBits> ones{};
  for (const int idx : members) {
    for (int b = 0; b < BinaryDescriptor::kBits; ++b) {
      ones[b] += all[idx].get_bit(b);
    }
  }
  const int half = static_cast<int>(members.size());
  BinaryDescriptor med;
  for (int b = 0; b < BinaryDescriptor::kBits; ++b) {
    med.set_bit(b, 2 * ones[b] > half);
  }
  return med;
}

}  // namespace

class VocabularyBuilder {
 public:
  VocabularyBuilder(int branching, int depth, std::uint64_t seed)
      : k_(branching), depth_(depth), rng_(seed) {}

  VocabularyTree run(const std::vector<VocabularyTree::Document>& documents,
                     std::uint64_t seed, int class_label) {
    std::vector<BinaryDescriptor> all;
    for (const auto& doc : documents) {
      all.insert(all.end(), doc.begin(), doc.end());
    }
    if (all.empty()) {
      throw InsufficientData("vocabulary training set is empty");
    }

    tree_.branching_ = k_;
    tree_.depth_ = depth_;
    tree_.seed_ = seed;
    tree_.class_label_ = class_label;
    tree_.nodes_.clear();
    tree_.nodes_.emplace_back();

    std::vector<int> members(all.size());
    std::iota(members.begin(), members.end(), 0);
    tree_.nodes_[0].centroid = majority_median(all, members);
    split(0, all, members, 0, 0);

    assign_idf(documents);
    return std::move(tree_);
  }

 private:
  void split(std::uint32_t node_index, const std::vector<BinaryDescriptor>& all,
             const std::vector<int>& members, int level,
             std::uint32_t path_word) {
    if (level == depth_) {
      tree_.nodes_[node_index].word_id = path_word;
      return;
    }

    std::vector<BinaryDescriptor> centroids;
    std::vector<std::vector<int>> clusters;
    cluster_members(all, members, centroids, clusters);

    // Children are appended in cluster order, so the layout is a
    // deterministic function of data and seed.
    std::vector<std::uint32_t> child_ids(k_);
    for (int c = 0; c < k_; ++c) {
      child_ids[c] = static_cast<std::uint32_t>(tree_.nodes_.size());
      tree_.nodes_.emplace_back();
      tree_.nodes_.back().centroid = centroids[c];
    }
    tree_.nodes_[node_index].children = child_ids;
    for (int c = 0; c < k_; ++c) {
      split(child_ids[c], all, clusters[c], level + 1,
            path_word * static_cast<std::uint32_t>(k_) +
                static_cast<std::uint32_t>(c));
    }
  }

  void cluster_members(const std::vector<BinaryDescriptor>& all,
                       const std::vector<int>& members,
                       std::vector<BinaryDescriptor>& centroids,
                       std::vector<std::vector<int>>& clusters) {
    centroids.assign(k_, BinaryDescriptor{});
    if (!members.empty()) {
      // Seed centers with a random sample, distinct indices when possible.
      std::vector<int> pool = members;
      for (int c = 0; c < k_; ++c) {
        if (!pool.empty()) {
          const std::size_t pick = rng_.uniform_index(pool.size());
          centroids[c] = all[pool[pick]];
          pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        } else {
          centroids[c] = all[members[rng_.uniform_index(members.size())]];
        }
      }
    }

    clusters.assign(k_, {});
    std::vector<int> assignment(members.size(), -1);
    constexpr int kMaxRounds = 25;
    for (int round = 0; round < kMaxRounds; ++round) {
      bool changed = false;
      for (auto& cl : clusters) cl.clear();
      for (std::size_t m = 0; m < members.size(); ++m) {
        int best = 0;
        int best_d = std::numeric_limits<int>::max();
        for (int c = 0; c < k_; ++c) {
          const int d = hamming(all[members[m]], centroids[c]);
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
        if (assignment[m] != best) {
          assignment[m] = best;
          changed = true;
        }
        clusters[best].push_back(members[m]);
      }

      repair_empty_clusters(all, centroids, clusters);

      if (!changed && round > 0) break;
      for (int c = 0; c < k_; ++c) {
        if (!clusters[c].empty()) {
          centroids[c] = majority_median(all, clusters[c]);
        }
      }
    }
  }

  /// Re-seeds an empty cluster with the farthest member of the largest
  /// sibling cluster so no leaf subtree goes permanently dead.
  void repair_empty_clusters(const std::vector<BinaryDescriptor>& all,
                             std::vector<BinaryDescriptor>& centroids,
                             std::vector<std::vector<int>>& clusters) {
    for (int c = 0; c < k_; ++c) {
      if (!clusters[c].empty()) continue;
      int largest = -1;
      std::size_t largest_size = 1;  // donor must keep at least one member
      for (int o = 0; o < k_; ++o) {
        if (clusters[o].size() > largest_size) {
          largest_size = clusters[o].size();
          largest = o;
        }
      }
      if (largest < 0) continue;  // all members identical, nothing to move
      auto& donor = clusters[largest];
      std::size_t far_pos = 0;
      int far_d = -1;
      for (std::size_t i = 0; i < donor.size(); ++i) {
        const int d = hamming(all[donor[i]], centroids[largest]);
        if (d > far_d) {
          far_d = d;
          far_pos = i;
        }
      }
      const int moved = donor[far_pos];
      donor.erase(donor.begin() + static_cast<std::ptrdiff_t>(far_pos));
      centroids[c] = all[moved];
      clusters[c].push_back(moved);
    }
  }

  void assign_idf(const std::vector<VocabularyTree::Document>& documents) {
    std::map<std::uint32_t, int> doc_count;
    for (const auto& doc : documents) {
      std::map<std::uint32_t, bool> seen;
      for (const auto& d : doc) seen[tree_.word_of(d)] = true;
      for (const auto& [w, _] : seen) doc_count[w] += 1;
    }
    const double n_docs = static_cast<double>(documents.size());
    for (auto& node : tree_.nodes_) {
      if (!node.children.empty()) continue;
      const auto it = doc_count.find(node.word_id);
      node.weight =
          it == doc_count.end() ? 0.0 : std::log(n_docs / it->second);
    }
  }

  int k_;
  int depth_;
  Rng rng_;
  VocabularyTree tree_;
};

VocabularyTree VocabularyTree::build(const std::vector<Document>& documents,
                                     int branching, int depth,
                                     std::uint64_t seed, int class_label) {
  if (branching < 2 || depth < 1) {
    throw DataError("vocabulary needs branching >= 2 and depth >= 1");
  }
  VocabularyBuilder builder(branching, depth, seed);
  return builder.run(documents, seed, class_label);
}

const VocabularyTree::Node* VocabularyTree::leaf_of(
    const BinaryDescriptor& d) const {
  const Node* node = &nodes_[0];
  while (!node->children.empty()) {
    int best_d = std::numeric_limits<int>::max();
    const Node* best = nullptr;
    for (const std::uint32_t child : node->children) {
      const int dist = hamming(d, nodes_[child].centroid);
      if (dist < best_d) {
        best_d = dist;
        best = &nodes_[child];
      }
    }
    node = best;
  }
  return node;
}

std::uint32_t VocabularyTree::word_of(const BinaryDescriptor& d) const {
  return leaf_of(d)->word_id;
}

BowVector VocabularyTree::transform(
    const std::vector<BinaryDescriptor>& descriptors) const {
  if (descriptors.empty()) {
    throw EmptyInput("cannot transform an empty descriptor set");
  }
  std::map<std::uint32_t, int> counts;
  std::map<std::uint32_t, double> weights;
  for (const auto& d : descriptors) {
    const Node* leaf = leaf_of(d);
    counts[leaf->word_id] += 1;
    weights[leaf->word_id] = leaf->weight;
  }
  BowVector v;
  for (const auto& [w, n] : counts) {
    const double value = n * weights[w];
    if (value > 0.0) v[w] = value;
  }
  return v;
}

std::size_t VocabularyTree::word_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes_) {
    if (node.children.empty()) ++n;
  }
  return n;
}

bool VocabularyTree::operator==(const VocabularyTree& other) const {
  if (branching_ != other.branching_ || depth_ != other.depth_ ||
      class_label_ != other.class_label_ || seed_ != other.seed_ ||
      nodes_.size() != other.nodes_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& a = nodes_[i];
    const Node& b = other.nodes_[i];
    if (a.centroid != b.centroid || a.children != b.children ||
        a.word_id != b.word_id || a.weight != b.weight) {
      return false;
    }
  }
  return true;
}

double l1_score(const BowVector& v1, const BowVector& v2) {
  double n1 = 0.0, n2 = 0.0;
  for (const auto& [w, x] : v1) n1 += std::abs(x);
  for (const auto& [w, x] : v2) n2 += std::abs(x);
  if (n1 <= 0.0 || n2 <= 0.0) {
    throw ZeroVector("l1_score needs vectors with positive L1 norm");
  }
  double dist = 0.0;
  auto it1 = v1.begin();
  auto it2 = v2.begin();
  while (it1 != v1.end() || it2 != v2.end()) {
    if (it2 == v2.end() || (it1 != v1.end() && it1->first < it2->first)) {
      dist += std::abs(it1->second / n1);
      ++it1;
    } else if (it1 == v1.end() || it2->first < it1->first) {
      dist += std::abs(it2->second / n2);
      ++it2;
    } else {
      dist += std::abs(it1->second / n1 - it2->second / n2);
      ++it1;
      ++it2;
    }
  }
  return 1.0 - 0.5 * dist;
}

void VocabularyTree::save(const std::string& path) const {
  nlohmann::ordered_json j;
  j["format"] = "semslam-vocab-v1";
  j["branching"] = branching_;
  j["depth"] = depth_;
  j["class_label"] = class_label_;
  j["seed"] = seed_;
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& node : nodes_) {
    nlohmann::ordered_json n;
    n["centroid"] = node.centroid.to_hex();
    if (node.children.empty()) {
      n["word"] = node.word_id;
      n["weight"] = node.weight;
    } else {
      n["children"] = node.children;
    }
    nodes.push_back(std::move(n));
  }
  j["nodes"] = std::move(nodes);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(1, '\t') << '\n';
}

VocabularyTree VocabularyTree::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid vocabulary file: ") + e.what());
  }
  if (j.value("format", "") != std::string("semslam-vocab-v1")) {
    throw SchemaMismatch("unsupported vocabulary format in " + path);
  }
  VocabularyTree tree;
  tree.branching_ = j.at("branching").get<int>();
  tree.depth_ = j.at("depth").get<int>();
  tree.class_label_ = j.at("class_label").get<int>();
  tree.seed_ = j.at("seed").get<std::uint64_t>();
  for (const auto& n : j.at("nodes")) {
    Node node;
    node.centroid = BinaryDescriptor::from_hex(n.at("centroid").get<std::string>());
    if (n.contains("children")) {
      node.children = n.at("children").get<std::vector<std::uint32_t>>();
    } else {
      node.word_id = n.at("word").get<std::uint32_t>();
      node.weight = n.at("weight").get<double>();
    }
    tree.nodes_.push_back(std::move(node));
  }
  if (tree.nodes_.empty()) throw DataError("vocabulary file has no nodes");
  return tree;
}

}  // namespace semslam
