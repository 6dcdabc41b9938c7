#include "core/losses.hpp"

#include <cmath>

#include "core/error.hpp"

namespace msuda {

namespace {

double clamped_nll(double p) {
  return -std::log(p < kProbFloor ? kProbFloor : p);
}

// Groups batch positions by domain, preserving order within each group.
std::vector<std::vector<std::size_t>> group_by_domain(const std::vector<int>& domains,
                                                      std::size_t num_domains) {
  std::vector<std::vector<std::size_t>> groups(num_domains);
  for (std::size_t i = 0; i < domains.size(); ++i) {
    const int d = domains[i];
    if (d < 0 || static_cast<std::size_t>(d) >= num_domains)
      throw_dimension("domain label out of range");
    groups[static_cast<std::size_t>(d)].push_back(i);
  }
  return groups;
}

SparseBatch subset(const SparseBatch& x, const std::vector<std::size_t>& idx) {
  SparseBatch out;
  out.dim = x.dim;
  out.rows.reserve(idx.size());
  for (std::size_t i : idx) out.rows.push_back(x.rows[i]);
  return out;
}

}  // namespace

double discriminator_loss(SharedPrivateModel& model, const DomainBatch& all_domains,
                          const DomainBatch& source_private,
                          bool accumulate_discriminator_grads) {
  if (all_domains.x.size() != all_domains.domains.size() ||
      source_private.x.size() != source_private.domains.size())
    throw_dimension("discriminator_loss: batch/domain length mismatch");
  if (all_domains.x.size() == 0) throw_config("discriminator_loss: empty all-domain batch");

  const std::size_t num_domains = model.config.num_domains();
  double total = 0.0;

  // Shared term over the all-domain batch.
  {
    const Matrix z = model.extract_shared(all_domains.x);
    const Matrix probs = model.discriminate(z);
    const Matrix targets = onehot_rows(all_domains.domains, num_domains);
    total += cross_entropy(probs, targets);
    if (accumulate_discriminator_grads) {
      const Matrix dlogits = softmax_xent_grad(probs, targets);
      model.discriminator.backward(z, dlogits, true);
    }
  }

  // Private term over the source batch, routed per instance domain.
  const std::size_t n_private = source_private.x.size();
  if (n_private > 0) {
    const auto groups = group_by_domain(source_private.domains, num_domains);
    if (!groups[num_domains - 1].empty())
      throw_config("discriminator_loss: target instance routed to a private extractor");
    double sum_nll = 0.0;
    for (std::size_t j = 0; j + 1 < num_domains; ++j) {
      if (groups[j].empty()) continue;
      const SparseBatch xs = subset(source_private.x, groups[j]);
      const Matrix z = model.extract_private(static_cast<int>(j), xs);
      const Matrix probs = model.discriminate(z);
      for (std::size_t r = 0; r < probs.rows; ++r) sum_nll += clamped_nll(probs.at(r, j));
      if (accumulate_discriminator_grads) {
        const std::vector<int> dom(groups[j].size(), static_cast<int>(j));
        const Matrix targets = onehot_rows(dom, num_domains);
        // Mean is over the whole private batch, not the per-domain group.
        Matrix dlogits = softmax_xent_grad(probs, targets,
                                           static_cast<double>(groups[j].size()) /
                                               static_cast<double>(n_private));
        model.discriminator.backward(z, dlogits, true);
      }
    }
    total += sum_nll / static_cast<double>(n_private);
  }
  return total;
}

double classifier_loss(SharedPrivateModel& model, int path, const SparseBatch& x,
                       const std::vector<int>& labels, ClassifierGrad mode) {
  if (x.size() != labels.size()) throw_dimension("classifier_loss: batch/label length mismatch");
  if (x.size() == 0) throw_config("classifier_loss: empty batch");
  for (int lb : labels)
    if (lb < 0 || static_cast<std::size_t>(lb) >= model.config.num_classes)
      throw_config("classifier_loss: unlabeled or out-of-range instance in batch");

  const bool grads = mode != ClassifierGrad::None;
  const bool main = mode == ClassifierGrad::MainPhase;

  Mlp::Cache shared_cache;
  Mlp::Cache private_cache;
  const Matrix z_s = model.extract_shared(x, main ? &shared_cache : nullptr);
  const Matrix z_p = model.extract_private(path, x, grads ? &private_cache : nullptr);
  const Matrix z_cat = hconcat(z_s, z_p);
  const Matrix probs = softmax(model.classifier.forward(z_cat));
  const Matrix targets = onehot_rows(labels, model.config.num_classes);
  const double loss = cross_entropy(probs, targets);

  if (grads) {
    const Matrix dlogits = softmax_xent_grad(probs, targets);
    const Matrix dz_cat = model.classifier.backward(z_cat, dlogits, main);
    auto [dz_s, dz_p] = hsplit(dz_cat, model.config.feature_dim);
    if (main) {
      model.shared_extractor.backward(shared_cache, dz_s, true);
      model.private_path(path).backward(private_cache, dz_p, true);
    } else {
      model.private_path(path).backward(private_cache, dz_p, true);
    }
  }
  return loss;
}

double main_phase_loss(SharedPrivateModel& model,
                       const std::vector<LabeledBatch>& source_batches,
                       const DomainBatch& all_domains, double lambda,
                       bool private_coop_term, bool with_grads) {
  if (lambda <= 0.0) throw_config("main_phase_loss: lambda must be positive");
  double total = 0.0;
  for (const LabeledBatch& batch : source_batches)
    total += classifier_loss(model, batch.source, batch.x, batch.labels,
                             with_grads ? ClassifierGrad::MainPhase : ClassifierGrad::None);

  // Adversarial term: ascend the discriminator's loss through E_s while the
  // discriminator itself stays frozen.
  {
    Mlp::Cache shared_cache;
    const Matrix z = model.extract_shared(all_domains.x, with_grads ? &shared_cache : nullptr);
    const Matrix probs = model.discriminate(z);
    const Matrix targets = onehot_rows(all_domains.domains, model.config.num_domains());
    total -= lambda * cross_entropy(probs, targets);
    if (with_grads) {
      const Matrix dlogits = softmax_xent_grad(probs, targets, -lambda);
      const Matrix dz = model.discriminator.backward(z, dlogits, false);
      model.shared_extractor.backward(shared_cache, dz, true);
    }
  }

  if (private_coop_term) {
    for (const LabeledBatch& batch : source_batches) {
      Mlp::Cache cache;
      const Matrix z = model.extract_private(batch.source, batch.x, with_grads ? &cache : nullptr);
      const Matrix probs = model.discriminate(z);
      const std::vector<int> dom(batch.x.size(), batch.source);
      const Matrix targets = onehot_rows(dom, model.config.num_domains());
      total += cross_entropy(probs, targets);
      if (with_grads) {
        const Matrix dlogits = softmax_xent_grad(probs, targets);
        const Matrix dz = model.discriminator.backward(z, dlogits, false);
        model.private_path(batch.source).backward(cache, dz, true);
      }
    }
  }
  return total;
}

}  // namespace msuda
