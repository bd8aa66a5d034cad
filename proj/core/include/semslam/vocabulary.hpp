#pragma once

#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "semslam/errors.hpp"

namespace semslam {

/// 256-bit binary feature descriptor.
struct BinaryDescriptor {
  static constexpr int kBits = 256;
  static constexpr int kWords = kBits / 64;

  std::array<std::uint64_t, kWords> words{};

  bool get_bit(int i) const { return (words[i / 64] >> (i % 64)) & 1u; }
  void set_bit(int i, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    if (v)
      words[i / 64] |= mask;
    else
      words[i / 64] &= ~mask;
  }
  void flip_bit(int i) { words[i / 64] ^= std::uint64_t{1} << (i % 64); }

  auto operator<=>(const BinaryDescriptor&) const = default;

  std::string to_hex() const;
  static BinaryDescriptor from_hex(const std::string& hex);
};

inline int hamming(const BinaryDescriptor& a, const BinaryDescriptor& b) {
  int d = 0;
  for (int i = 0; i < BinaryDescriptor::kWords; ++i) {
    d += std::popcount(a.words[i] ^ b.words[i]);
  }
  return d;
}

/// Sparse appearance vector: word id -> positive tf-idf weight.
using BowVector = std::map<std::uint32_t, double>;

/// Hierarchical k-medians vocabulary over binary descriptors, one tree per
/// object class. Every internal node has exactly `branching` children and
/// all leaves sit at depth `depth`, so there are branching^depth words.
class VocabularyTree {
 public:
  struct Node {
    BinaryDescriptor centroid;
    std::vector<std::uint32_t> children;  // empty for leaves
    std::uint32_t word_id = 0;            // valid for leaves
    double weight = 0.0;                  // idf, valid for leaves
  };

  /// One training document, typically all descriptors of one object
  /// instance; document grouping drives the idf weights.
  using Document = std::vector<BinaryDescriptor>;

  /// Builds the tree by recursive k-medians over the flattened training
  /// set, then assigns each leaf the idf weight ln(N / n_leaf) where N is
  /// the document count and n_leaf the number of documents reaching the
  /// leaf. Leaves never reached keep weight 0. Deterministic per seed.
  static VocabularyTree build(const std::vector<Document>& documents,
                              int branching, int depth, std::uint64_t seed,
                              int class_label = -1);

  /// Greedy root-to-leaf descent of every descriptor; Hamming ties go to
  /// the lowest child index. Entries with zero idf are dropped.
  BowVector transform(const std::vector<BinaryDescriptor>& descriptors) const;

  std::uint32_t word_of(const BinaryDescriptor& d) const;

  int branching() const { return branching_; }
  int depth() const { return depth_; }
  int class_label() const { return class_label_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t word_count() const;
  const std::vector<Node>& nodes() const { return nodes_; }

  bool operator==(const VocabularyTree& other) const;

  void save(const std::string& path) const;
  static VocabularyTree load(const std::string& path);

 private:
  friend class VocabularyBuilder;

  const Node* leaf_of(const BinaryDescriptor& d) const;

  int branching_ = 0;
  int depth_ = 0;
  int class_label_ = -1;
  std::uint64_t seed_ = 0;
  std::vector<Node> nodes_;  // nodes_[0] is the root
};

/// L1 similarity of two BoW vectors, each normalized by its own L1 norm:
/// 1 - 0.5 * || v1/|v1| - v2/|v2| ||_1, in [0, 1].
double l1_score(const BowVector& v1, const BowVector& v2);

}  // namespace semslam
