#pragma once

#include "core/data.hpp"

namespace msuda {

// Multi-domain corpus generator. The vocabulary splits into a shared block
// whose polarity is global, one disjoint block per domain whose polarity is
// flipped by the domain sign, and leftover pure-noise ids. Source documents
// draw domain-flavored tokens from their own block only; target documents
// draw them from their own block and from the blocks of sign-matching
// sources, so a source classifier transfers onto the target exactly when the
// two domains use their polarity-sensitive vocabulary the same way.
struct SynthSpec {
  std::size_t vocab_size = 200;
  std::size_t shared_block = 50;    // ids [0, shared_block)
  std::size_t private_block = 30;   // per-domain ids after the shared block
  std::size_t num_sources = 3;
  std::vector<int> signs;           // num_sources + 1 entries in {-1, +1}, target last;
                                    // empty selects +1, -1, -1, ..., +1
  std::size_t docs_per_domain = 1000;
  double mean_tokens = 30.0;
  double noise_rate = 0.2;
  double private_weight = 0.5;      // private share of the non-noise tokens
  std::uint64_t seed = 0;

  std::size_t num_domains() const { return num_sources + 1; }
  std::vector<int> resolved_signs() const;
  void validate() const;
};

struct SynthCorpora {
  std::vector<RawCorpus> sources;
  RawCorpus target;                // labels stripped
  std::vector<int> target_labels;  // sealed sidecar, for evaluation only
  std::vector<std::string> domain_names;
};

SynthCorpora synth_generate(const SynthSpec& spec);

void write_corpus(const RawCorpus& corpus, const std::string& path, bool with_labels);
void write_labels(const std::vector<int>& labels, const std::string& path);
std::vector<int> read_labels(const std::string& path);

}  // namespace msuda
