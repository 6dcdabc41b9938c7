#include "core/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace msuda {

namespace {

constexpr const char* kLabelToken = "#label#";

bool parse_count(const std::string& s, std::uint32_t* out) {
  if (s.empty()) return false;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
    if (v > 0xffffffffull) return false;
  }
  if (v == 0) return false;
  *out = static_cast<std::uint32_t>(v);
  return true;
}

}  // namespace

RawCorpus parse_blitzer_stream(std::istream& in, const std::string& origin) {
  RawCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) {
      log_warn(origin + ":" + std::to_string(line_no) + ": empty line skipped");
      continue;
    }
    RawExample ex;
    ex.raw_line = line;
    std::map<std::string, std::uint64_t> counts;
    std::istringstream fields(line);
    std::string pair;
    while (fields >> pair) {
      const std::size_t colon = pair.rfind(':');
      if (colon == std::string::npos || colon == 0)
        throw_data(origin + ":" + std::to_string(line_no) + ": malformed pair '" + pair + "'");
      const std::string token = pair.substr(0, colon);
      const std::string value = pair.substr(colon + 1);
      if (token == kLabelToken) {
        if (value == "positive") {
          ex.label = kPositive;
        } else if (value == "negative") {
          ex.label = kNegative;
        } else {
          throw_data(origin + ":" + std::to_string(line_no) + ": unknown label '" + value + "'");
        }
        continue;
      }
      std::uint32_t count = 0;
      if (!parse_count(value, &count))
        throw_data(origin + ":" + std::to_string(line_no) + ": count for '" + token +
                   "' is not a positive integer");
      counts[token] += count;
    }
    ex.token_counts.reserve(counts.size());
    for (const auto& [tok, cnt] : counts)
      ex.token_counts.emplace_back(tok, static_cast<std::uint32_t>(std::min<std::uint64_t>(cnt, 0xffffffffull)));
    corpus.push_back(std::move(ex));
  }
  return corpus;
}

RawCorpus parse_blitzer(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open corpus file: " + path);
  return parse_blitzer_stream(in, path);
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (const std::string& tok : id_to_token) {
    for (char c : tok) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    h ^= 0;
    h *= 1099511628211ull;
  }
  return h;
}

Vocabulary build_vocabulary(const std::vector<const RawCorpus*>& corpora, std::size_t size) {
  if (corpora.empty()) throw_config("build_vocabulary: no corpora given");
  if (size == 0) throw_config("build_vocabulary: size must be positive");
  std::unordered_map<std::string, std::uint64_t> totals;
  for (const RawCorpus* corpus : corpora)
    for (const RawExample& ex : *corpus)
      for (const auto& [tok, cnt] : ex.token_counts) totals[tok] += cnt;

  std::vector<std::pair<std::string, std::uint64_t>> ranked(totals.begin(), totals.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() < size) {
    log_warn("vocabulary: only " + std::to_string(ranked.size()) + " distinct tokens for requested size " +
             std::to_string(size));
    size = ranked.size();
  }

  std::vector<std::string> tokens;
  tokens.reserve(size);
  for (std::size_t i = 0; i < size; ++i) tokens.push_back(ranked[i].first);
  return vocabulary_from_tokens(std::move(tokens));
}

Vocabulary vocabulary_from_tokens(std::vector<std::string> tokens) {
  Vocabulary vocab;
  vocab.id_to_token = std::move(tokens);
  vocab.token_to_id.reserve(vocab.id_to_token.size());
  for (std::uint32_t id = 0; id < vocab.id_to_token.size(); ++id)
    vocab.token_to_id.emplace(vocab.id_to_token[id], id);
  return vocab;
}

FeatureVector vectorize(const RawExample& ex, const Vocabulary& vocab) {
  std::vector<std::pair<std::uint32_t, double>> present;
  present.reserve(ex.token_counts.size());
  for (const auto& [tok, cnt] : ex.token_counts) {
    auto it = vocab.token_to_id.find(tok);
    if (it == vocab.token_to_id.end()) continue;
    present.emplace_back(it->second, std::log1p(static_cast<double>(cnt)));
  }
  std::sort(present.begin(), present.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  FeatureVector fv;
  fv.indices.reserve(present.size());
  fv.values.reserve(present.size());
  for (const auto& [id, v] : present) {
    fv.indices.push_back(id);
    fv.values.push_back(v);
  }
  return fv;
}

std::size_t DatasetBundle::n_source_examples() const {
  std::size_t n = 0;
  for (const Corpus& s : sources) n += s.items.size();
  return n;
}

namespace {

SplitIndices cut(std::vector<std::size_t> order, std::size_t a, std::size_t b) {
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(a));
  out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(a),
                 order.begin() + static_cast<std::ptrdiff_t>(a + b));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(a + b), order.end());
  return out;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  return order;
}

}  // namespace

SplitIndices split(std::size_t n, const std::array<double, 3>& fractions, std::uint64_t seed) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9) throw_config("split: fractions must sum to 1");
  for (double f : fractions)
    if (f < 0.0) throw_config("split: negative fraction");
  const std::size_t a = static_cast<std::size_t>(std::floor(fractions[0] * static_cast<double>(n)));
  const std::size_t b = static_cast<std::size_t>(std::floor(fractions[1] * static_cast<double>(n)));
  const std::size_t c = n - a - b;
  if ((fractions[0] > 0.0 && a == 0) || (fractions[1] > 0.0 && b == 0) ||
      (fractions[2] > 0.0 && c == 0))
    throw_data("split: corpus of " + std::to_string(n) + " is too small for the requested fractions");
  return cut(shuffled_indices(n, seed), a, b);
}

SplitIndices split_counts(std::size_t n, std::size_t pool, std::size_t val, std::uint64_t seed) {
  if (pool + val > n)
    throw_data("split: corpus of " + std::to_string(n) + " is smaller than pool " +
               std::to_string(pool) + " + val " + std::to_string(val));
  return cut(shuffled_indices(n, seed), pool, val);
}

}  // namespace msuda
