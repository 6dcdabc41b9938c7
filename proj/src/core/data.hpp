#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/matrix.hpp"

namespace msuda {

// Polarity labels double as class indices.
inline constexpr int kNegative = 0;
inline constexpr int kPositive = 1;

using FeatureVector = SparseVector;

// One document as parsed from disk: merged token counts (sorted by token),
// an optional polarity label, and the original line for re-emission.
struct RawExample {
  std::vector<std::pair<std::string, std::uint32_t>> token_counts;
  std::optional<int> label;
  std::string raw_line;
};

using RawCorpus = std::vector<RawExample>;

// Input format, one document per line:
//   tok:cnt tok:cnt ... [#label#:positive|negative]
// Counts are positive decimal integers; duplicate tokens on a line are
// summed; empty lines are skipped with a warning. Malformed pairs raise a
// data error naming the line.
RawCorpus parse_blitzer(const std::string& path);
RawCorpus parse_blitzer_stream(std::istream& in, const std::string& origin);

struct Vocabulary {
  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, std::uint32_t> token_to_id;

  std::size_t size() const { return id_to_token.size(); }
  // FNV-1a over the tokens in id order; identifies the vectorization space.
  std::uint64_t hash() const;
};

// Top `size` tokens by total count over every provided corpus; ties broken
// lexicographically; ids assigned in rank order.
Vocabulary build_vocabulary(const std::vector<const RawCorpus*>& corpora, std::size_t size);

Vocabulary vocabulary_from_tokens(std::vector<std::string> tokens);

// Drops out-of-vocabulary tokens and maps counts through ln(1 + count).
FeatureVector vectorize(const RawExample& ex, const Vocabulary& vocab);

struct Example {
  FeatureVector features;
  std::optional<int> class_label;
  int domain = 0;
};

struct Corpus {
  std::string name;
  std::vector<Example> items;
};

// K labeled source corpora plus the unlabeled target pool. Domain indices
// follow corpus order with the target last; the domain-labeled union is the
// concatenation of all corpora.
struct DatasetBundle {
  std::vector<Corpus> sources;
  Corpus target;
  std::size_t input_dim = 0;

  std::size_t num_sources() const { return sources.size(); }
  int target_domain() const { return static_cast<int>(sources.size()); }
  std::size_t n_source_examples() const;
  std::size_t n_target_examples() const { return target.items.size(); }
  std::size_t n_total() const { return n_source_examples() + n_target_examples(); }
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Seeded shuffle followed by a contiguous cut. Fractions must sum to 1; a
// nonzero fraction that rounds to an empty part is an error.
SplitIndices split(std::size_t n, const std::array<double, 3>& fractions, std::uint64_t seed);

// Absolute-count variant: `pool` then `val` elements, remainder test.
SplitIndices split_counts(std::size_t n, std::size_t pool, std::size_t val, std::uint64_t seed);

}  // namespace msuda
