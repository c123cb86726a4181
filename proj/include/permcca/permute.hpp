#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace permcca {

// Index array: applying it to a matrix takes row perm[i] into row i.
using Permutation = std::vector<int>;

struct PermutationPair {
  Permutation y;
  Permutation x;
};

enum class BlockMode { Within, Whole };

// One label per observation. Within: observations move only inside their
// block. Whole: equally sized blocks move as units, internal order preserved.
struct BlockStructure {
  std::vector<int> labels;
  BlockMode mode = BlockMode::Within;

  std::size_t size() const { return labels.size(); }
  // Labels restricted to the given observation indices, in that order.
  BlockStructure subset(const std::vector<std::ptrdiff_t>& keep) const;
};

struct PermutationScheme {
  std::vector<PermutationPair> pairs;   // pairs[0] is the identity
  std::uint64_t seed = 0;
  // The admissible group has fewer elements than pairs.size(); sampling with
  // replacement is still valid but repeats are certain.
  bool group_smaller_than_j = false;

  std::size_t size() const { return pairs.size(); }
};

Permutation identity_permutation(std::size_t n);
bool is_identity(const Permutation& p);
bool is_bijection(const Permutation& p);

// log of the number of permutations admissible under `blocks` (or n! when
// unrestricted).
double log_group_size(std::size_t n, const BlockStructure* blocks);

// Identity first, then j - 1 uniform draws (with replacement) from the
// admissible group, generated with std::mt19937_64 seeded by `seed`. When
// `both_sides` is false every x permutation is the identity.
PermutationScheme build_scheme(std::size_t n_prime, std::size_t n_double_prime, std::size_t j,
                               const BlockStructure* blocks, bool both_sides, std::uint64_t seed);

// All n! permutations of the left side in lexicographic order.
PermutationScheme exhaustive_scheme(std::size_t n_prime, std::size_t max_j);

} // namespace permcca
