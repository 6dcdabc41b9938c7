#include "doctest.h"

#include <cmath>
#include <sstream>

#include "core/data.hpp"
#include "core/error.hpp"

using namespace msuda;

namespace {

RawCorpus parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_blitzer_stream(in, "<test>");
}

std::uint32_t count_of(const RawExample& ex, const std::string& token) {
  for (const auto& [tok, cnt] : ex.token_counts)
    if (tok == token) return cnt;
  return 0;
}

}  // namespace

TEST_CASE("parser handles the basic line forms") {
  const RawCorpus c = parse_text(
      "great:2 movie:1 #label#:positive\n"
      "bad:1 #label#:negative\n");
  REQUIRE(c.size() == 2);
  CHECK(count_of(c[0], "great") == 2);
  CHECK(count_of(c[0], "movie") == 1);
  CHECK(c[0].label == kPositive);
  CHECK(count_of(c[1], "bad") == 1);
  CHECK(c[1].label == kNegative);
}

TEST_CASE("parser skips empty lines and sums duplicate tokens") {
  const RawCorpus c = parse_text("\nx:1 x:4\n\n");
  REQUIRE(c.size() == 1);
  CHECK(count_of(c[0], "x") == 5);
  CHECK_FALSE(c[0].label.has_value());
}

TEST_CASE("parser rejects malformed counts with the line number") {
  for (const std::string bad : {"tok:0\n", "tok:-3\n", "tok:abc\n", "tok:3.5\n", "tok:\n",
                                "loner\n", ":5\n"}) {
    try {
      parse_text("fine:1\n" + bad);
      FAIL("expected a data error for: ", bad);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }
}

TEST_CASE("parser rejects unknown label values") {
  CHECK_THROWS_AS(parse_text("a:1 #label#:neutral\n"), Error);
}

TEST_CASE("golden file parses to the expected corpus") {
  const RawCorpus c = parse_blitzer(std::string(MSUDA_GOLDEN_DIR) + "/blitzer_golden.txt");
  REQUIRE(c.size() == 48);  // 50 lines, two blank

  CHECK(count_of(c[0], "great") == 2);
  CHECK(c[0].label == kPositive);
  REQUIRE(c[2].token_counts.size() == 1);
  CHECK(count_of(c[2], "dup") == 6);  // summed duplicates
  CHECK(count_of(c[3], "a_bigram_token") == 4);
  CHECK(c[4].token_counts.empty());  // label-only line
  CHECK(c[4].label == kPositive);
  CHECK_FALSE(c[5].label.has_value());  // unlabeled document
  CHECK(count_of(c[5], "no_label_here") == 7);
  CHECK(count_of(c[6], "punct!?.,token") == 1);
  CHECK(count_of(c[7], "café") == 2);

  // programmatic tail: w<i>:1 x<i>:<i>, even i positive
  CHECK(count_of(c[8], "w11") == 1);
  CHECK(count_of(c[8], "x11") == 11);
  CHECK(c[8].label == kNegative);
  CHECK(count_of(c[47], "x50") == 50);
  CHECK(c[47].label == kPositive);

  std::uint64_t total = 0;
  std::size_t positives = 0, negatives = 0, unlabeled = 0;
  for (const RawExample& ex : c) {
    for (const auto& [tok, cnt] : ex.token_counts) total += cnt;
    if (!ex.label)
      ++unlabeled;
    else if (*ex.label == kPositive)
      ++positives;
    else
      ++negatives;
  }
  CHECK(total == 1294);
  CHECK(positives == 24);
  CHECK(negatives == 23);
  CHECK(unlabeled == 1);
}

TEST_CASE("vocabulary ranks by count with lexicographic ties") {
  const RawCorpus c = parse_text("a:5 b:3 c:1\n");
  const Vocabulary top2 = build_vocabulary({&c}, 2);
  REQUIRE(top2.size() == 2);
  CHECK(top2.id_to_token[0] == "a");
  CHECK(top2.id_to_token[1] == "b");

  const RawCorpus tie = parse_text("b:2 a:2\n");
  const Vocabulary top1 = build_vocabulary({&tie}, 1);
  REQUIRE(top1.size() == 1);
  CHECK(top1.id_to_token[0] == "a");
}

TEST_CASE("vocabulary degenerates to all tokens when the corpus is small") {
  const RawCorpus c = parse_text("a:1 b:1\n");
  const Vocabulary v = build_vocabulary({&c}, 100);
  CHECK(v.size() == 2);
}

TEST_CASE("vocabulary is independent of corpus ordering") {
  const RawCorpus c1 = parse_text("a:5 b:3\n");
  const RawCorpus c2 = parse_text("b:4 c:9\n");
  const Vocabulary v12 = build_vocabulary({&c1, &c2}, 3);
  const Vocabulary v21 = build_vocabulary({&c2, &c1}, 3);
  CHECK(v12.id_to_token == v21.id_to_token);
  CHECK(v12.hash() == v21.hash());
}

TEST_CASE("vocabulary hash changes with content") {
  const Vocabulary a = vocabulary_from_tokens({"x", "y"});
  const Vocabulary b = vocabulary_from_tokens({"x", "z"});
  const Vocabulary c = vocabulary_from_tokens({"xy"});
  CHECK(a.hash() != b.hash());
  CHECK(a.hash() != c.hash());
}

TEST_CASE("vectorize drops out-of-vocabulary tokens and log-transforms counts") {
  const Vocabulary vocab = vocabulary_from_tokens({"a", "b"});
  const RawCorpus c = parse_text("zz:3 yy:1\na:1\na:1 b:7 qq:2\n");
  const FeatureVector all_oov = vectorize(c[0], vocab);
  CHECK(all_oov.nnz() == 0);

  const FeatureVector single = vectorize(c[1], vocab);
  REQUIRE(single.nnz() == 1);
  CHECK(single.indices[0] == 0);
  CHECK(single.values[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const FeatureVector mixed = vectorize(c[2], vocab);
  REQUIRE(mixed.nnz() == 2);
  CHECK(mixed.indices == std::vector<std::uint32_t>{0, 1});
  CHECK(mixed.values[1] == doctest::Approx(std::log(8.0)).epsilon(1e-12));
}

TEST_CASE("parse -> vectorize -> densify round trip") {
  const Vocabulary vocab = vocabulary_from_tokens({"a", "b", "c"});
  const RawCorpus c = parse_text("c:2 a:1 oov:9\n");
  const FeatureVector fv = vectorize(c[0], vocab);
  SparseBatch batch;
  batch.dim = vocab.size();
  batch.rows = {&fv};
  const Matrix dense = batch.dense();
  CHECK(dense.at(0, 0) == doctest::Approx(std::log(2.0)));
  CHECK(dense.at(0, 1) == 0.0);
  CHECK(dense.at(0, 2) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("split covers the corpus exactly and is seed-stable") {
  const SplitIndices all_train = split(10, {1.0, 0.0, 0.0}, 1);
  CHECK(all_train.train.size() == 10);
  CHECK(all_train.val.empty());
  CHECK(all_train.test.empty());

  const SplitIndices a = split(2000, {0.8, 0.1, 0.1}, 99);
  CHECK(a.train.size() == 1600);
  CHECK(a.val.size() == 200);
  CHECK(a.test.size() == 200);
  const SplitIndices b = split(2000, {0.8, 0.1, 0.1}, 99);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);

  std::vector<bool> seen(2000, false);
  for (const auto* part : {&a.train, &a.val, &a.test})
    for (std::size_t i : *part) {
      CHECK_FALSE(seen[i]);
      seen[i] = true;
    }
  for (bool s : seen) CHECK(s);
}

TEST_CASE("split rejects corpora too small for the request") {
  CHECK_THROWS_AS(split(5, {0.9, 0.05, 0.05}, 0), Error);  // val fraction rounds to zero
  CHECK_THROWS_AS(split_counts(10, 8, 5, 0), Error);
  CHECK_THROWS_AS(split(10, {0.5, 0.4, 0.4}, 0), Error);  // fractions exceed one
}

TEST_CASE("bundle count identities") {
  DatasetBundle bundle;
  bundle.sources.resize(2);
  bundle.sources[0].items.resize(3);
  bundle.sources[1].items.resize(5);
  bundle.target.items.resize(7);
  CHECK(bundle.n_source_examples() == 8);
  CHECK(bundle.n_target_examples() == 7);
  CHECK(bundle.n_total() == 15);
  CHECK(bundle.target_domain() == 2);
}
