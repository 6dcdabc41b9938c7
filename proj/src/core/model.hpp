#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/adam.hpp"
#include "core/data.hpp"
#include "core/layers.hpp"

namespace msuda {

struct ModelConfig {
  std::size_t input_dim = 5000;
  std::size_t hidden_dim = 1000;
  std::size_t feature_dim = 128;
  std::size_t num_sources = 0;  // K >= 1
  std::size_t num_classes = 2;

  std::size_t num_domains() const { return num_sources + 1; }
  void validate() const;
};

// Routes extract_private through the target extractor instead of a source one.
inline constexpr int kTargetPath = -1;

// Shared extractor, K private extractors (and optionally a target-private
// one), a single sentiment classifier over the concatenated features, and a
// (K+1)-way domain discriminator. Domain index convention: sources in corpus
// order, target last.
struct SharedPrivateModel {
  ModelConfig config;
  Mlp shared_extractor;
  std::vector<Mlp> private_extractors;
  std::optional<Mlp> target_extractor;
  AffineLayer classifier;     // 2*feature_dim -> num_classes
  AffineLayer discriminator;  // feature_dim -> num_domains

  static SharedPrivateModel create(const ModelConfig& cfg, std::uint64_t seed);
  void add_target_extractor(std::uint64_t seed);

  Matrix extract_shared(const SparseBatch& x, Mlp::Cache* cache = nullptr) const;
  // path: source index in [0, K) or kTargetPath.
  Matrix extract_private(int path, const SparseBatch& x, Mlp::Cache* cache = nullptr) const;
  const Mlp& private_path(int path) const;
  Mlp& private_path(int path);

  // Softmax class probabilities of the classifier over [z_shared || z_private].
  Matrix classify(const Matrix& z_shared, const Matrix& z_private) const;
  // Softmax over the K+1 domains.
  Matrix discriminate(const Matrix& z) const;

  // One class-probability matrix per source path.
  std::vector<Matrix> source_predictions(const SparseBatch& x) const;

  ParamSet discriminator_params();
  ParamSet main_params();  // shared + private + classifier
  ParamSet target_params();
  ParamSet all_params();   // checkpoint order

  void zero_all_grads();
};

// Copies parameter values between two structurally identical models.
void copy_params(const SharedPrivateModel& from, SharedPrivateModel& to);

struct ModelManifest {
  std::vector<std::string> domain_names;  // corpus order, target last
  std::vector<std::string> vocabulary;    // id order
  std::uint64_t vocab_hash = 0;
  std::string framework = "ws";           // "ws" or "2st"
  std::string config_json;                // resolved run configuration echo
};

// Binary container with an embedded JSON manifest; parameter payloads are raw
// doubles, so a save/load round trip is bit-exact.
void save_checkpoint(const SharedPrivateModel& model, const ModelManifest& manifest,
                     const std::string& path);
std::pair<SharedPrivateModel, ModelManifest> load_checkpoint(const std::string& path);

}  // namespace msuda
