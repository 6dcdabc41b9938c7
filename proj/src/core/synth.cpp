#include "core/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace msuda {

std::vector<int> SynthSpec::resolved_signs() const {
  if (!signs.empty()) return signs;
  std::vector<int> s(num_domains(), -1);
  s.front() = 1;
  s.back() = 1;
  return s;
}

void SynthSpec::validate() const {
  if (num_sources < 1) throw_config("synth: num_sources must be >= 1");
  if (docs_per_domain == 0) throw_config("synth: docs_per_domain must be positive");
  if (vocab_size == 0) throw_config("synth: vocab_size must be positive");
  if (shared_block + private_block * num_domains() > vocab_size)
    throw_config("synth: shared and private blocks exceed the vocabulary");
  if (shared_block % 2 != 0 || private_block % 2 != 0)
    throw_config("synth: block sizes must be even (half per polarity)");
  if (noise_rate < 0.0 || noise_rate > 1.0) throw_config("synth: noise_rate must be in [0, 1]");
  if (private_weight < 0.0 || private_weight > 1.0)
    throw_config("synth: private_weight must be in [0, 1]");
  if (mean_tokens <= 0.0) throw_config("synth: mean_tokens must be positive");
  if (!signs.empty()) {
    if (signs.size() != num_domains())
      throw_config("synth: signs must list one entry per domain (sources then target)");
    for (int s : signs)
      if (s != 1 && s != -1) throw_config("synth: signs must be +1 or -1");
  }
}

namespace {

std::string token_name(std::size_t id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "t%05zu", id);
  return buf;
}

// id range [begin, begin+len); the first half carries positive polarity under
// sign +1, the second half under sign -1.
struct Block {
  std::size_t begin = 0;
  std::size_t len = 0;

  std::size_t draw(Rng& rng, int label, int sign) const {
    const std::size_t half = len / 2;
    const bool first_half = (label == kPositive) == (sign > 0);
    const std::size_t offset = first_half ? 0 : half;
    return begin + offset + static_cast<std::size_t>(rng.below(half));
  }
};

}  // namespace

SynthCorpora synth_generate(const SynthSpec& spec) {
  spec.validate();
  const std::vector<int> signs = spec.resolved_signs();
  const std::size_t k = spec.num_sources;
  const Block shared{0, spec.shared_block};
  std::vector<Block> private_blocks(spec.num_domains());
  for (std::size_t d = 0; d < spec.num_domains(); ++d)
    private_blocks[d] = Block{spec.shared_block + d * spec.private_block, spec.private_block};

  // Blocks a target document may borrow from: its own plus every
  // sign-matching source.
  std::vector<std::size_t> target_pool_domains;
  for (std::size_t j = 0; j < k; ++j)
    if (signs[j] == signs[k]) target_pool_domains.push_back(j);
  target_pool_domains.push_back(k);

  Rng rng(spec.seed);
  SynthCorpora out;
  out.sources.resize(k);
  for (std::size_t d = 0; d < spec.num_domains(); ++d) {
    const bool is_target = d == k;
    out.domain_names.push_back(is_target ? "target" : "src" + std::to_string(d));
    for (std::size_t doc = 0; doc < spec.docs_per_domain; ++doc) {
      const int label = rng.below(2) == 0 ? kNegative : kPositive;
      std::size_t n_tokens = rng.poisson(spec.mean_tokens);
      if (n_tokens == 0) n_tokens = 1;
      std::map<std::string, std::uint32_t> counts;
      for (std::size_t t = 0; t < n_tokens; ++t) {
        std::size_t id;
        if (rng.uniform() < spec.noise_rate) {
          id = static_cast<std::size_t>(rng.below(spec.vocab_size));
        } else if (spec.private_block > 0 && rng.uniform() < spec.private_weight) {
          if (is_target) {
            const std::size_t pick = target_pool_domains[rng.below(target_pool_domains.size())];
            id = private_blocks[pick].draw(rng, label, signs[k]);
          } else {
            id = private_blocks[d].draw(rng, label, signs[d]);
          }
        } else if (spec.shared_block > 0) {
          id = shared.draw(rng, label, 1);
        } else {
          id = static_cast<std::size_t>(rng.below(spec.vocab_size));
        }
        counts[token_name(id)] += 1;
      }
      RawExample ex;
      ex.token_counts.assign(counts.begin(), counts.end());
      if (is_target) {
        out.target_labels.push_back(label);
        out.target.push_back(std::move(ex));
      } else {
        ex.label = label;
        out.sources[d].push_back(std::move(ex));
      }
    }
  }
  return out;
}

void write_corpus(const RawCorpus& corpus, const std::string& path, bool with_labels) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw_io("cannot write corpus file: " + path);
  for (const RawExample& ex : corpus) {
    bool first = true;
    for (const auto& [tok, cnt] : ex.token_counts) {
      if (!first) outf << ' ';
      outf << tok << ':' << cnt;
      first = false;
    }
    if (with_labels && ex.label.has_value()) {
      if (!first) outf << ' ';
      outf << "#label#:" << (*ex.label == kPositive ? "positive" : "negative");
    }
    outf << '\n';
  }
  if (!outf) throw_io("write failed: " + path);
}

void write_labels(const std::vector<int>& labels, const std::string& path) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw_io("cannot write labels file: " + path);
  for (int lb : labels) outf << (lb == kPositive ? "positive" : "negative") << '\n';
  if (!outf) throw_io("write failed: " + path);
}

std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open labels file: " + path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "positive") {
      labels.push_back(kPositive);
    } else if (line == "negative") {
      labels.push_back(kNegative);
    } else {
      throw_data(path + ":" + std::to_string(line_no) + ": unknown label '" + line + "'");
    }
  }
  return labels;
}

}  // namespace msuda
