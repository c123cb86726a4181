#include "permcca/permute.hpp"

#include "permcca/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

namespace permcca {

BlockStructure BlockStructure::subset(const std::vector<std::ptrdiff_t>& keep) const
{
  BlockStructure out;
  out.mode = mode;
  out.labels.reserve(keep.size());
  for (auto i : keep) {
    if (i < 0 || static_cast<std::size_t>(i) >= labels.size())
      throw Error(ErrorCode::InvalidBlocks, "block labels do not cover observation " + std::to_string(i));
    out.labels.push_back(labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

Permutation identity_permutation(std::size_t n)
{
  Permutation p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

bool is_identity(const Permutation& p)
{
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] != static_cast<int>(i))
      return false;
  return true;
}

bool is_bijection(const Permutation& p)
{
  Permutation sorted = p;
  std::sort(sorted.begin(), sorted.end());
  return is_identity(sorted);
}

namespace {

// Member positions of each block, blocks ordered by first appearance.
std::vector<std::vector<int>> block_members(const BlockStructure& blocks)
{
  std::map<int, std::size_t> slot;
  std::vector<std::vector<int>> members;
  for (std::size_t i = 0; i < blocks.labels.size(); ++i) {
    auto [it, inserted] = slot.try_emplace(blocks.labels[i], members.size());
    if (inserted)
      members.emplace_back();
    members[it->second].push_back(static_cast<int>(i));
  }
  return members;
}

void check_blocks(const BlockStructure& blocks, std::size_t n)
{
  if (blocks.labels.size() != n)
    throw Error(ErrorCode::InvalidBlocks, "block labels cover " + std::to_string(blocks.labels.size()) +
                                              " observations but " + std::to_string(n) +
                                              " are permuted");
  if (blocks.mode == BlockMode::Whole) {
    const auto members = block_members(blocks);
    for (const auto& m : members)
      if (m.size() != members.front().size())
        throw Error(ErrorCode::InvalidBlocks, "whole-block permutation needs blocks of equal size");
  }
}

double log_factorial(std::size_t n)
{
  return std::lgamma(static_cast<double>(n) + 1.0);
}

Permutation draw(std::size_t n, const BlockStructure* blocks, std::mt19937_64& rng)
{
  if (blocks == nullptr) {
    Permutation p = identity_permutation(n);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
  }
  Permutation p(n);
  const auto members = block_members(*blocks);
  if (blocks->mode == BlockMode::Within) {
    for (const auto& m : members) {
      std::vector<int> shuffled = m;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (std::size_t t = 0; t < m.size(); ++t)
        p[static_cast<std::size_t>(m[t])] = shuffled[t];
    }
  } else {
    std::vector<std::size_t> order(members.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < members.size(); ++b)
      for (std::size_t t = 0; t < members[b].size(); ++t)
        p[static_cast<std::size_t>(members[b][t])] = members[order[b]][t];
  }
  return p;
}

} // namespace

double log_group_size(std::size_t n, const BlockStructure* blocks)
{
  if (blocks == nullptr)
    return log_factorial(n);
  const auto members = block_members(*blocks);
  if (blocks->mode == BlockMode::Whole)
    return log_factorial(members.size());
  double total = 0.0;
  for (const auto& m : members)
    total += log_factorial(m.size());
  return total;
}

PermutationScheme build_scheme(std::size_t n_prime, std::size_t n_double_prime, std::size_t j,
                               const BlockStructure* blocks, bool both_sides, std::uint64_t seed)
{
  if (j < 2)
    throw Error(ErrorCode::InvalidOptions, "at least 2 permutations are required (got " + std::to_string(j) + ")");
  if (blocks != nullptr && both_sides)
    throw Error(ErrorCode::InvalidOptions,
                "exchangeability blocks require a common row space; only one side can be permuted");
  if (blocks != nullptr)
    check_blocks(*blocks, n_prime);

  PermutationScheme scheme;
  scheme.seed = seed;
  double log_group = log_group_size(n_prime, blocks);
  if (both_sides)
    log_group += log_factorial(n_double_prime);
  scheme.group_smaller_than_j = log_group < std::log(static_cast<double>(j)) - 1e-9;

  std::mt19937_64 rng(seed);
  scheme.pairs.reserve(j);
  scheme.pairs.push_back({identity_permutation(n_prime), identity_permutation(n_double_prime)});
  for (std::size_t i = 1; i < j; ++i) {
    PermutationPair pair;
    pair.y = draw(n_prime, blocks, rng);
    pair.x = both_sides ? draw(n_double_prime, nullptr, rng) : identity_permutation(n_double_prime);
    scheme.pairs.push_back(std::move(pair));
  }
  return scheme;
}

PermutationScheme exhaustive_scheme(std::size_t n_prime, std::size_t max_j)
{
  double count = 1.0;
  for (std::size_t i = 2; i <= n_prime; ++i)
    count *= static_cast<double>(i);
  if (count > static_cast<double>(max_j))
    throw Error(ErrorCode::TooLarge, std::to_string(n_prime) + "! permutations exceed the limit of " +
                                         std::to_string(max_j));

  PermutationScheme scheme;
  Permutation p = identity_permutation(n_prime);
  const Permutation fixed = p;
  do {
    scheme.pairs.push_back({p, fixed});
  } while (std::next_permutation(p.begin(), p.end()));
  return scheme;
}

} // namespace permcca
