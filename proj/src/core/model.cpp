#include "core/model.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

#include "core/error.hpp"
#include "core/rng.hpp"

namespace msuda {

void ModelConfig::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || feature_dim == 0 || num_classes < 2)
    throw_config("model: dimensions must be positive and num_classes >= 2");
  if (num_sources < 1) throw_config("model: at least one source domain is required");
}

SharedPrivateModel SharedPrivateModel::create(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SharedPrivateModel m;
  m.config = cfg;
  Rng rng(seed);
  m.shared_extractor = Mlp(cfg.input_dim, cfg.hidden_dim, cfg.feature_dim);
  m.shared_extractor.init_he(rng);
  m.private_extractors.reserve(cfg.num_sources);
  for (std::size_t j = 0; j < cfg.num_sources; ++j) {
    m.private_extractors.emplace_back(cfg.input_dim, cfg.hidden_dim, cfg.feature_dim);
    m.private_extractors.back().init_he(rng);
  }
  m.classifier = AffineLayer(2 * cfg.feature_dim, cfg.num_classes);
  m.classifier.init_he(rng);
  m.discriminator = AffineLayer(cfg.feature_dim, cfg.num_domains());
  m.discriminator.init_he(rng);
  return m;
}

void SharedPrivateModel::add_target_extractor(std::uint64_t seed) {
  Rng rng(seed);
  target_extractor = Mlp(config.input_dim, config.hidden_dim, config.feature_dim);
  target_extractor->init_he(rng);
}

Matrix SharedPrivateModel::extract_shared(const SparseBatch& x, Mlp::Cache* cache) const {
  return shared_extractor.forward(x, cache);
}

const Mlp& SharedPrivateModel::private_path(int path) const {
  if (path == kTargetPath) {
    if (!target_extractor)
      throw_config("target extractor requested but not present on this model");
    return *target_extractor;
  }
  if (path < 0 || static_cast<std::size_t>(path) >= private_extractors.size())
    throw_config("private extractor index out of range");
  return private_extractors[static_cast<std::size_t>(path)];
}

Mlp& SharedPrivateModel::private_path(int path) {
  return const_cast<Mlp&>(static_cast<const SharedPrivateModel*>(this)->private_path(path));
}

Matrix SharedPrivateModel::extract_private(int path, const SparseBatch& x, Mlp::Cache* cache) const {
  return private_path(path).forward(x, cache);
}

Matrix SharedPrivateModel::classify(const Matrix& z_shared, const Matrix& z_private) const {
  if (z_shared.rows != z_private.rows || z_shared.cols != config.feature_dim ||
      z_private.cols != config.feature_dim)
    throw_dimension("classify: feature blocks must be batch x feature_dim");
  return softmax(classifier.forward(hconcat(z_shared, z_private)));
}

Matrix SharedPrivateModel::discriminate(const Matrix& z) const {
  if (z.cols != config.feature_dim) throw_dimension("discriminate: feature width mismatch");
  return softmax(discriminator.forward(z));
}

std::vector<Matrix> SharedPrivateModel::source_predictions(const SparseBatch& x) const {
  const Matrix z_s = extract_shared(x);
  std::vector<Matrix> preds;
  preds.reserve(config.num_sources);
  for (std::size_t j = 0; j < config.num_sources; ++j)
    preds.push_back(classify(z_s, extract_private(static_cast<int>(j), x)));
  return preds;
}

namespace {

void add_affine(ParamSet& set, const std::string& prefix, AffineLayer& layer) {
  set.push_back({prefix + ".weight", layer.weight.data.data(), layer.grad_weight.data.data(),
                 layer.weight.size(), layer.weight.rows, layer.weight.cols});
  set.push_back({prefix + ".bias", layer.bias.data(), layer.grad_bias.data(), layer.bias.size(),
                 layer.bias.size(), 1});
}

void add_mlp(ParamSet& set, const std::string& prefix, Mlp& mlp) {
  add_affine(set, prefix + ".hidden", mlp.hidden);
  add_affine(set, prefix + ".output", mlp.output);
}

}  // namespace

ParamSet SharedPrivateModel::discriminator_params() {
  ParamSet set;
  add_affine(set, "discriminator", discriminator);
  return set;
}

ParamSet SharedPrivateModel::main_params() {
  ParamSet set;
  add_mlp(set, "e_shared", shared_extractor);
  for (std::size_t j = 0; j < private_extractors.size(); ++j)
    add_mlp(set, "e_private." + std::to_string(j), private_extractors[j]);
  add_affine(set, "classifier", classifier);
  return set;
}

ParamSet SharedPrivateModel::target_params() {
  ParamSet set;
  if (!target_extractor) throw_config("target extractor not present");
  add_mlp(set, "e_target", *target_extractor);
  return set;
}

ParamSet SharedPrivateModel::all_params() {
  ParamSet set = main_params();
  ParamSet d = discriminator_params();
  set.insert(set.end(), d.begin(), d.end());
  if (target_extractor) {
    ParamSet t = target_params();
    set.insert(set.end(), t.begin(), t.end());
  }
  return set;
}

void SharedPrivateModel::zero_all_grads() {
  shared_extractor.zero_grads();
  for (Mlp& p : private_extractors) p.zero_grads();
  if (target_extractor) target_extractor->zero_grads();
  classifier.zero_grads();
  discriminator.zero_grads();
}

void copy_params(const SharedPrivateModel& from, SharedPrivateModel& to) {
  ParamSet src = const_cast<SharedPrivateModel&>(from).all_params();
  ParamSet dst = to.all_params();
  if (src.size() != dst.size()) throw_dimension("copy_params: model structures differ");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].count != dst[i].count || src[i].name != dst[i].name)
      throw_dimension("copy_params: block mismatch at '" + src[i].name + "'");
    std::memcpy(dst[i].value, src[i].value, src[i].count * sizeof(double));
  }
}

namespace {

constexpr char kMagic[8] = {'M', 'S', 'U', 'D', 'A', 'C', 'K', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_checkpoint(const SharedPrivateModel& model, const ModelManifest& manifest,
                     const std::string& path) {
  nlohmann::json meta;
  meta["format_version"] = 1;
  meta["model"] = {{"input_dim", model.config.input_dim},
                   {"hidden_dim", model.config.hidden_dim},
                   {"feature_dim", model.config.feature_dim},
                   {"num_sources", model.config.num_sources},
                   {"num_classes", model.config.num_classes},
                   {"has_target_extractor", model.target_extractor.has_value()}};
  meta["domains"] = manifest.domain_names;
  meta["vocabulary"] = manifest.vocabulary;
  meta["vocab_hash"] = std::to_string(manifest.vocab_hash);
  meta["framework"] = manifest.framework;
  if (!manifest.config_json.empty())
    meta["config"] = nlohmann::json::parse(manifest.config_json);
  const std::string meta_str = meta.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<std::uint32_t>(meta_str.size()));
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

  ParamSet params = const_cast<SharedPrivateModel&>(model).all_params();
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const ParamBlock& b : params) {
    write_u32(out, static_cast<std::uint32_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    write_u64(out, b.rows);
    write_u64(out, b.cols);
    out.write(reinterpret_cast<const char*>(b.value),
              static_cast<std::streamsize>(b.count * sizeof(double)));
  }
  if (!out) throw_io("write failed: " + path);
}

std::pair<SharedPrivateModel, ModelManifest> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw_data("not a model checkpoint: " + path);
  const std::uint32_t meta_len = read_u32(in);
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), meta_len);
  if (!in) throw_data("truncated checkpoint manifest: " + path);
  nlohmann::json meta = nlohmann::json::parse(meta_str, nullptr, false);
  if (meta.is_discarded()) throw_data("corrupt checkpoint manifest: " + path);

  ModelConfig cfg;
  cfg.input_dim = meta["model"]["input_dim"].get<std::size_t>();
  cfg.hidden_dim = meta["model"]["hidden_dim"].get<std::size_t>();
  cfg.feature_dim = meta["model"]["feature_dim"].get<std::size_t>();
  cfg.num_sources = meta["model"]["num_sources"].get<std::size_t>();
  cfg.num_classes = meta["model"]["num_classes"].get<std::size_t>();
  SharedPrivateModel model = SharedPrivateModel::create(cfg, 0);
  if (meta["model"]["has_target_extractor"].get<bool>()) model.add_target_extractor(0);

  ModelManifest manifest;
  manifest.domain_names = meta["domains"].get<std::vector<std::string>>();
  manifest.vocabulary = meta["vocabulary"].get<std::vector<std::string>>();
  manifest.vocab_hash = std::stoull(meta["vocab_hash"].get<std::string>());
  manifest.framework = meta["framework"].get<std::string>();
  if (meta.contains("config")) manifest.config_json = meta["config"].dump();

  ParamSet params = model.all_params();
  const std::uint32_t n_blocks = read_u32(in);
  if (n_blocks != params.size()) throw_data("checkpoint block count mismatch: " + path);
  for (ParamBlock& b : params) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint64_t rows = read_u64(in);
    const std::uint64_t cols = read_u64(in);
    if (!in || name != b.name || rows != b.rows || cols != b.cols)
      throw_data("checkpoint block '" + name + "' does not match model layout");
    in.read(reinterpret_cast<char*>(b.value),
            static_cast<std::streamsize>(b.count * sizeof(double)));
    if (!in) throw_data("truncated checkpoint payload: " + path);
  }
  model.zero_all_grads();
  return {std::move(model), std::move(manifest)};
}

}  // namespace msuda
