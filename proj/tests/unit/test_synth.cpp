#include "doctest.h"

#include <cmath>

#include "core/adam.hpp"
#include "core/error.hpp"
#include "core/layers.hpp"
#include "core/synth.hpp"

using namespace msuda;

namespace {

struct VecCorpus {
  std::vector<FeatureVector> features;
  std::vector<int> labels;

  SparseBatch batch() const {
    SparseBatch b;
    b.dim = dim;
    for (const FeatureVector& f : features) b.rows.push_back(&f);
    return b;
  }
  std::size_t dim = 0;
};

VecCorpus vectorize_corpus(const RawCorpus& raw, const std::vector<int>& labels,
                           const Vocabulary& vocab) {
  VecCorpus out;
  out.dim = vocab.size();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.features.push_back(vectorize(raw[i], vocab));
    out.labels.push_back(labels.empty() ? *raw[i].label : labels[i]);
  }
  return out;
}

// Logistic probe: enough capacity to read the generator's signal, nothing
// domain-adaptive about it.
struct Probe {
  AffineLayer layer;

  Probe(std::size_t dim, std::uint64_t seed) : layer(dim, 2) {
    Rng rng(seed);
    layer.init_he(rng);
  }

  void fit(const VecCorpus& corpus, std::size_t steps, double lr, std::uint64_t seed) {
    ParamSet params = {{"w", layer.weight.data.data(), layer.grad_weight.data.data(),
                        layer.weight.size(), layer.weight.rows, layer.weight.cols},
                       {"b", layer.bias.data(), layer.grad_bias.data(), layer.bias.size(),
                        layer.bias.size(), 1}};
    AdamState adam(params, lr);
    Rng rng(seed);
    const std::size_t batch_size = 16;
    for (std::size_t s = 0; s < steps; ++s) {
      SparseBatch bx;
      bx.dim = corpus.dim;
      std::vector<int> by;
      for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t pick = rng.below(corpus.features.size());
        bx.rows.push_back(&corpus.features[pick]);
        by.push_back(corpus.labels[pick]);
      }
      const Matrix probs = softmax(layer.forward(bx));
      const Matrix targets = onehot_rows(by, 2);
      layer.backward_params(bx, softmax_xent_grad(probs, targets));
      adam.step(params);
    }
  }

  double accuracy(const VecCorpus& corpus) const {
    const Matrix probs = softmax(layer.forward(corpus.batch()));
    std::size_t hits = 0;
    for (std::size_t r = 0; r < probs.rows; ++r) {
      const int pred = probs.at(r, 1) > probs.at(r, 0) ? 1 : 0;
      if (pred == corpus.labels[r]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(probs.rows);
  }
};

Vocabulary full_vocab(const SynthSpec& spec) {
  std::vector<std::string> tokens;
  char buf[16];
  for (std::size_t id = 0; id < spec.vocab_size; ++id) {
    std::snprintf(buf, sizeof(buf), "t%05zu", id);
    tokens.push_back(buf);
  }
  return vocabulary_from_tokens(std::move(tokens));
}

}  // namespace

TEST_CASE("generation is bit-reproducible for a fixed seed") {
  SynthSpec spec;
  spec.docs_per_domain = 40;
  spec.seed = 123;
  const SynthCorpora a = synth_generate(spec);
  const SynthCorpora b = synth_generate(spec);
  CHECK(a.target_labels == b.target_labels);
  REQUIRE(a.sources.size() == b.sources.size());
  for (std::size_t j = 0; j < a.sources.size(); ++j) {
    REQUIRE(a.sources[j].size() == b.sources[j].size());
    for (std::size_t i = 0; i < a.sources[j].size(); ++i) {
      CHECK(a.sources[j][i].token_counts == b.sources[j][i].token_counts);
      CHECK(a.sources[j][i].label == b.sources[j][i].label);
    }
  }
  const SynthSpec other = [] {
    SynthSpec s;
    s.docs_per_domain = 40;
    s.seed = 124;
    return s;
  }();
  const SynthCorpora c = synth_generate(other);
  CHECK(c.target_labels != a.target_labels);
}

TEST_CASE("spec validation rejects inconsistent settings") {
  SynthSpec spec;
  spec.docs_per_domain = 0;
  CHECK_THROWS_AS(synth_generate(spec), Error);
  spec.docs_per_domain = 10;
  spec.signs = {1, -1};  // needs num_sources + 1 entries
  CHECK_THROWS_AS(synth_generate(spec), Error);
  spec.signs.clear();
  spec.vocab_size = 100;  // 50 + 4 * 30 > 100
  CHECK_THROWS_AS(synth_generate(spec), Error);
}

TEST_CASE("corpus sizes and label sealing") {
  SynthSpec spec;
  spec.num_sources = 2;
  spec.docs_per_domain = 25;
  const SynthCorpora c = synth_generate(spec);
  REQUIRE(c.sources.size() == 2);
  CHECK(c.sources[0].size() == 25);
  CHECK(c.target.size() == 25);
  CHECK(c.target_labels.size() == 25);
  for (const RawExample& ex : c.target) CHECK_FALSE(ex.label.has_value());
  for (const RawExample& ex : c.sources[0]) CHECK(ex.label.has_value());
  CHECK(c.domain_names == std::vector<std::string>{"src0", "src1", "target"});
}

TEST_CASE("pure noise carries no learnable signal") {
  SynthSpec spec;
  spec.num_sources = 1;
  spec.docs_per_domain = 800;
  spec.noise_rate = 1.0;
  spec.seed = 5;
  const SynthCorpora c = synth_generate(spec);
  const Vocabulary vocab = full_vocab(spec);
  VecCorpus all = vectorize_corpus(c.sources[0], {}, vocab);
  VecCorpus train, test;
  train.dim = test.dim = vocab.size();
  for (std::size_t i = 0; i < all.features.size(); ++i) {
    (i % 2 ? train : test).features.push_back(all.features[i]);
    (i % 2 ? train : test).labels.push_back(all.labels[i]);
  }
  Probe probe(vocab.size(), 7);
  probe.fit(train, 400, 0.05, 11);
  CHECK(std::abs(probe.accuracy(test) - 0.5) < 0.1);
}

TEST_CASE("without private blocks, pooled and per-source training coincide") {
  double max_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthSpec spec;
    spec.num_sources = 2;
    spec.private_block = 0;
    spec.docs_per_domain = 400;
    spec.noise_rate = 0.2;
    spec.seed = seed;
    const SynthCorpora c = synth_generate(spec);
    const Vocabulary vocab = full_vocab(spec);
    const VecCorpus target = vectorize_corpus(c.target, c.target_labels, vocab);

    VecCorpus pooled;
    pooled.dim = vocab.size();
    std::vector<VecCorpus> per_source;
    for (const RawCorpus& src : c.sources) {
      VecCorpus vc = vectorize_corpus(src, {}, vocab);
      pooled.features.insert(pooled.features.end(), vc.features.begin(), vc.features.end());
      pooled.labels.insert(pooled.labels.end(), vc.labels.begin(), vc.labels.end());
      per_source.push_back(std::move(vc));
    }

    Probe pooled_probe(vocab.size(), seed + 100);
    pooled_probe.fit(pooled, 600, 0.05, seed + 200);
    const double pooled_acc = pooled_probe.accuracy(target);

    double mean_single = 0.0;
    for (std::size_t j = 0; j < per_source.size(); ++j) {
      Probe p(vocab.size(), seed + 300 + j);
      p.fit(per_source[j], 600, 0.05, seed + 400 + j);
      mean_single += p.accuracy(target);
    }
    mean_single /= static_cast<double>(per_source.size());
    max_gap = std::max(max_gap, std::abs(pooled_acc - mean_single));
  }
  CHECK(max_gap < 0.05);
}

TEST_CASE("a sign-matching source transfers better, and more so with heavier private blocks") {
  auto margin_at = [](double private_weight, std::uint64_t seed) {
    SynthSpec spec;
    spec.num_sources = 2;
    spec.signs = {1, -1, 1};  // source 0 matches the target, source 1 flips
    spec.docs_per_domain = 500;
    spec.private_weight = private_weight;
    spec.noise_rate = 0.1;
    spec.seed = seed;
    const SynthCorpora c = synth_generate(spec);
    const Vocabulary vocab = full_vocab(spec);
    const VecCorpus target = vectorize_corpus(c.target, c.target_labels, vocab);
    double acc[2];
    for (std::size_t j = 0; j < 2; ++j) {
      const VecCorpus src = vectorize_corpus(c.sources[j], {}, vocab);
      Probe p(vocab.size(), seed + j);
      p.fit(src, 600, 0.05, seed + 10 + j);
      acc[j] = p.accuracy(target);
    }
    return acc[0] - acc[1];
  };

  double low = 0.0, high = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    low += margin_at(0.2, seed) / 3.0;
    high += margin_at(0.7, seed) / 3.0;
  }
  CHECK(high > 0.02);   // matching source clearly ahead
  CHECK(high > low);    // margin grows with the private share
}
