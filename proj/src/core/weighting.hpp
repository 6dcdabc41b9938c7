#pragma once

#include <optional>

#include "core/model.hpp"

namespace msuda {

// Which features feed the discriminator when estimating instance-to-domain
// relations. SharedPath renormalizes the source entries of D(E_s(x));
// PrivatePath scores each source j by D(E_p_j(x))[j].
enum class WeightMode { SharedPath, PrivatePath };

WeightMode weight_mode_from_string(const std::string& s);
const char* to_string(WeightMode mode);

// Renormalizes nonnegative raw scores to sum 1. An all-zero input falls back
// to uniform with a warning.
std::vector<double> normalize_weights(const std::vector<double>& raw);

std::vector<double> instance_weights(const SharedPrivateModel& model, const FeatureVector& x,
                                     WeightMode mode);

// Convex combination of the per-source class distributions.
std::vector<double> combine_predictions(const std::vector<std::vector<double>>& per_source,
                                        const std::vector<double>& weights);

struct TargetPrediction {
  std::vector<double> combined;
  std::vector<std::vector<double>> per_source;
  std::vector<double> weights;
  double confidence = 0.0;  // max entry of combined
  int label = 0;            // argmax of combined
};

std::vector<TargetPrediction> predict_target(const SharedPrivateModel& model,
                                             const SparseBatch& x, WeightMode mode);

// Acceptance rule for one instance. Outside bootstrap an instance is taken
// iff both the ensemble and the target-path confidence strictly exceed delta
// and the two argmax labels agree; bootstrap applies the ensemble condition
// alone. Returns the accepted label.
std::optional<int> pseudo_label_rule(const std::vector<double>& ensemble_probs,
                                     const std::vector<double>& target_probs, double delta,
                                     bool bootstrap);

struct PseudoLabel {
  std::size_t index;  // position within the pool batch
  int label;
};

// Scans the pool and returns the accepted (instance, label) pairs. Requires a
// target extractor unless bootstrap is set. delta must lie in (0.5, 1].
std::vector<PseudoLabel> pseudo_label_select(const SharedPrivateModel& model,
                                             const SparseBatch& pool, double delta,
                                             bool bootstrap, WeightMode mode);

}  // namespace msuda
