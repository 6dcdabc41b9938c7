#pragma once

#include "core/model.hpp"

namespace msuda {

// Instances with their domain labels; sources and target may be mixed.
struct DomainBatch {
  SparseBatch x;
  std::vector<int> domains;
};

// A class-labeled batch drawn from one source corpus.
struct LabeledBatch {
  SparseBatch x;
  std::vector<int> labels;
  int source = 0;
};

// Mean domain cross-entropy of the discriminator on shared features over the
// all-domain batch, plus mean domain cross-entropy on private features over
// the source batch (each instance routed through its own domain's private
// extractor). Gradients, when requested, flow into the discriminator only;
// extractors are never touched here. A target instance in the private batch
// is a contract violation.
double discriminator_loss(SharedPrivateModel& model, const DomainBatch& all_domains,
                          const DomainBatch& source_private,
                          bool accumulate_discriminator_grads);

enum class ClassifierGrad {
  None,                // evaluate only
  MainPhase,           // accumulate into E_s, the routed private extractor and C
  TargetExtractorOnly  // accumulate into E_t; everything else frozen
};

// Mean class cross-entropy of classify(E_s(x), E_path(x)) against labels.
double classifier_loss(SharedPrivateModel& model, int path, const SparseBatch& x,
                       const std::vector<int>& labels, ClassifierGrad mode);

// Sum of per-source classifier losses minus lambda times the domain
// cross-entropy on shared features (discriminator frozen, gradient ascent on
// its loss through E_s). With the cooperative term enabled, adds the domain
// cross-entropy on private features with gradients into each private
// extractor.
double main_phase_loss(SharedPrivateModel& model,
                       const std::vector<LabeledBatch>& source_batches,
                       const DomainBatch& all_domains, double lambda,
                       bool private_coop_term, bool with_grads);

}  // namespace msuda
