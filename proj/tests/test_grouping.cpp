#include <doctest.h>

#include <sstream>

#include "commonit/grouping.hpp"
#include "commonit/io.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace commonit;

TEST_CASE("group_by_task") {
  Dataset ds;
  ds.records = {testing::make_record("r1", "a", "qa"), testing::make_record("r2", "b", "qa"),
                testing::make_record("r3", "c", "mt")};
  auto g = group_by_task(ds);
  REQUIRE(g.groups.size() == 2);
  CHECK(g.groups[0] == Group{"qa", {"r1", "r2"}});
  CHECK(g.groups[1] == Group{"mt", {"r3"}});
  CHECK(partition_problems(g, ds).empty());

  for (auto& r : ds.records) r.task = "qa";
  CHECK(group_by_task(ds).groups.size() == 1);

  ds.records[1].task.reset();
  CHECK_THROWS_WITH_AS(group_by_task(ds), doctest::Contains("r2"), InputError);
}

TEST_CASE("group_by_length worked examples") {
  auto ds = testing::dataset_with_lengths({1, 2, 3, 4, 5, 6});
  auto g = group_by_length(ds, 3);
  REQUIRE(g.groups.size() == 3);
  CHECK(g.groups[0].ids == std::vector<std::string>{"r1", "r2"});
  CHECK(g.groups[1].ids == std::vector<std::string>{"r3", "r4"});
  CHECK(g.groups[2].ids == std::vector<std::string>{"r5", "r6"});
  CHECK(g.groups[0].label == "len[1,2]#0");
  CHECK(g.groups[2].label == "len[5,6]#2");

  auto one = group_by_length(ds, 1);
  REQUIRE(one.groups.size() == 1);
  CHECK(one.groups[0].ids == ds.ids());

  auto ties = testing::dataset_with_lengths({5, 5, 5, 5});
  auto t = group_by_length(ties, 2);
  CHECK(t.groups[0].ids == std::vector<std::string>{"r1", "r2"});
  CHECK(t.groups[1].ids == std::vector<std::string>{"r3", "r4"});
  CHECK(t.groups[0].label != t.groups[1].label);

  // Unsorted input: bins hold dataset order internally.
  auto mixed = testing::dataset_with_lengths({6, 1, 5, 2, 4, 3, 1});
  auto m = group_by_length(mixed, 3);
  CHECK(m.groups[0].ids == std::vector<std::string>{"r2", "r4", "r7"});
  CHECK(m.groups[1].ids == std::vector<std::string>{"r5", "r6"});
  CHECK(m.groups[2].ids == std::vector<std::string>{"r1", "r3"});

  CHECK_THROWS_AS(group_by_length(ds, 0), InputError);
  CHECK_THROWS_AS(group_by_length(ds, 7), InputError);
}

TEST_CASE("group_by_length matches the enumeration oracle on random inputs") {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(60);
    std::vector<std::size_t> lengths(n);
    for (auto& l : lengths) l = 1 + rng.uniform_index(1 + rng.uniform_index(12));
    const std::size_t bins = 1 + rng.uniform_index(n);
    auto ds = testing::dataset_with_lengths(lengths);
    auto g = group_by_length(ds, bins);
    const auto expect = oracle::length_bins(lengths, bins);

    REQUIRE(g.groups.size() == bins);
    std::size_t lo = n, hi = 0;
    for (std::size_t b = 0; b < bins; ++b) {
      for (const auto& id : g.groups[b].ids) {
        const std::size_t idx = std::stoul(id.substr(1)) - 1;
        CHECK(expect[idx] == b);
      }
      lo = std::min(lo, g.groups[b].ids.size());
      hi = std::max(hi, g.groups[b].ids.size());
    }
    CHECK(hi - lo <= 1);
    CHECK(partition_problems(g, ds).empty());
  }
}

TEST_CASE("cosine_similarity") {
  Eigen::Vector2d e1(1, 0), e2(0, 1), d(1, 1);
  CHECK(cosine_similarity(e1, e1) == doctest::Approx(1.0));
  CHECK(cosine_similarity(e1, e2) == doctest::Approx(0.0));
  CHECK(cosine_similarity(d, e1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(std::abs(cosine_similarity(d, e1) - 0.7071) < 1e-4);

  Eigen::VectorXd three = Eigen::Vector3d(1, 2, 3), dyn = e1;
  CHECK_THROWS_AS(cosine_similarity(dyn, three), InputError);
  CHECK_THROWS_AS(cosine_similarity(e1, Eigen::Vector2d::Zero().eval()), InputError);
  // Works on float and on expressions.
  Eigen::Vector2f f(3, 4);
  CHECK(cosine_similarity(f, (2.0f * f).eval()) == doctest::Approx(1.0f));
}

namespace {

ReferenceSet make_ref(std::initializer_list<std::pair<const char*, Eigen::Vector2d>> entries) {
  ReferenceSet ref;
  for (const auto& [label, v] : entries) ref.add(label, v);
  return ref;
}

}  // namespace

TEST_CASE("knn_classify worked examples") {
  auto ab = make_ref({{"A", {1, 0}}, {"B", {0, 1}}});
  CHECK(knn_classify(Eigen::Vector2d(0.9, 0.1), ab, 1) == "A");

  auto aab = make_ref({{"A", {1, 0}}, {"A", {0.9, 0.1}}, {"B", {0, 1}}});
  CHECK(knn_classify(Eigen::Vector2d(1, 0), aab, 3) == "A");

  // 1-1 vote tie: the label of the best-ranked neighbor wins.
  auto tie = make_ref({{"B", {0.6, 0.8}}, {"A", {1, 0.1}}});
  CHECK(knn_classify(Eigen::Vector2d(1, 0), tie, 2) == "A");
  CHECK(knn_classify(Eigen::Vector2d(0, 1), tie, 2) == "B");

  // Exact similarity tie: reference order decides.
  auto same = make_ref({{"X", {1, 0}}, {"Y", {2, 0}}});
  CHECK(nearest_neighbors(Eigen::Vector2d(1, 0), same, 2) == std::vector<std::size_t>{0, 1});
  CHECK(knn_classify(Eigen::Vector2d(1, 0), same, 1) == "X");

  CHECK_THROWS_AS(knn_classify(Eigen::Vector2d(1, 0), ab, 0), InputError);
  CHECK_THROWS_AS(knn_classify(Eigen::Vector2d(1, 0), ab, 3), InputError);
  CHECK_THROWS_AS(knn_classify(Eigen::Vector3d(1, 0, 0), ab, 1), InputError);
}

TEST_CASE("knn_classify agrees with the brute-force oracle and is scale invariant") {
  Rng rng(17);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t k = std::vector<std::size_t>{1, 3, 8}[rng.uniform_index(3)];
    auto inst = oracle::random_knn_instance(rng, 16, 200, k);
    const auto ref = inst.reference();
    const auto got = knn_classify(inst.query_vector(), ref, k);
    REQUIRE(got == oracle::knn(inst));

    // Positive powers of two keep every similarity bit-identical.
    auto scaled = inst;
    for (auto& v : scaled.vectors) {
      const double s = std::ldexp(1.0, static_cast<int>(rng.uniform_index(20)) - 10);
      for (auto& x : v) x *= s;
    }
    for (auto& x : scaled.query) x *= 8.0;
    CHECK(knn_classify(scaled.query_vector(), scaled.reference(), k) == got);
  }
}

TEST_CASE("reference and embedding tables enforce their invariants") {
  ReferenceSet ref;
  ref.add("a", Eigen::Vector2d(1, 0));
  CHECK_THROWS_AS(ref.add("b", Eigen::Vector3d(1, 0, 0)), InputError);
  CHECK_THROWS_AS(ref.add("b", Eigen::Vector2d(0, 0)), InputError);
  CHECK_THROWS_AS(ref.add("", Eigen::Vector2d(0, 1)), InputError);
  ref.add("a", Eigen::Vector2d(0, 1));
  CHECK(ref.size() == 2);

  EmbeddingTable t;
  t.add("r1", Eigen::Vector2d(1, 0));
  CHECK_THROWS_AS(t.add("r1", Eigen::Vector2d(0, 1)), InputError);
  CHECK_THROWS_AS(t.add("r2", Eigen::Vector3d(0, 1, 0)), InputError);
  CHECK_THROWS_AS(t.add("r3", Eigen::Vector2d(0, 0)), InputError);
}

TEST_CASE("group_by_embedding") {
  Dataset ds;
  ds.records = {testing::make_record("r1", "a"), testing::make_record("r2", "b")};
  EmbeddingTable emb;
  emb.add("r1", Eigen::Vector2d(1, 0));
  emb.add("r2", Eigen::Vector2d(0, 1));
  auto ref = make_ref({{"anatomy", {1, 0}}, {"law", {0, 1}}});
  auto g = group_by_embedding(ds, emb, ref, 1);
  REQUIRE(g.groups.size() == 2);
  CHECK(g.groups[0] == Group{"anatomy", {"r1"}});
  CHECK(g.groups[1] == Group{"law", {"r2"}});

  EmbeddingTable same;
  same.add("r1", Eigen::Vector2d(1, 0.1));
  same.add("r2", Eigen::Vector2d(1, -0.1));
  auto one = group_by_embedding(ds, same, ref, 1);
  REQUIRE(one.groups.size() == 1);
  CHECK(one.groups[0].label == "anatomy");

  EmbeddingTable partial;
  partial.add("r1", Eigen::Vector2d(1, 0));
  CHECK_THROWS_WITH_AS(group_by_embedding(ds, partial, ref, 1), doctest::Contains("r2"),
                       InputError);
  EmbeddingTable wrong_dim;
  wrong_dim.add("r1", Eigen::Vector3d(1, 0, 0));
  wrong_dim.add("r2", Eigen::Vector3d(0, 1, 0));
  CHECK_THROWS_AS(group_by_embedding(ds, wrong_dim, ref, 1), InputError);
}

TEST_CASE("group_by_embedding recovers Gaussian clusters") {
  // Three well separated centers with one exemplar each; records drawn
  // around them with small sigma must land in their generating cluster.
  Rng rng(2024);
  const Eigen::Index dim = 16;
  std::vector<Eigen::VectorXd> centers;
  ReferenceSet ref;
  for (int c = 0; c < 3; ++c) {
    centers.push_back(testing::random_vector(rng, dim).normalized() * 5.0);
    ref.add("c" + std::to_string(c), centers.back());
  }
  Dataset ds;
  EmbeddingTable emb;
  std::vector<std::string> truth;
  for (int i = 0; i < 100; ++i) {
    const auto c = rng.uniform_index(3);
    const std::string id = "x" + std::to_string(i);
    ds.records.push_back(testing::make_record(id, "t"));
    Eigen::VectorXd v = centers[c];
    for (Eigen::Index j = 0; j < dim; ++j) v(j) += rng.normal(0.0, 0.3);
    emb.add(id, v);
    truth.push_back("c" + std::to_string(c));
  }
  auto g = group_by_embedding(ds, emb, ref, 1);
  const auto label_of = g.label_of();
  int agree = 0;
  for (int i = 0; i < 100; ++i) agree += label_of.at("x" + std::to_string(i)) == truth[i];
  CHECK(agree >= 95);
  CHECK(testing::is_exact_partition(g, ds));
}

TEST_CASE("partition_problems detects overlap, gaps and order") {
  auto ds = testing::dataset_with_lengths({1, 2, 3});
  GroupedDataset g;
  g.groups = {{"a", {"r1", "r2"}}, {"b", {"r2"}}};
  auto p = partition_problems(g, ds);
  CHECK(p.size() == 2);  // r2 twice, r3 missing
  g.groups = {{"a", {"r2", "r1"}}, {"b", {"r3"}}};
  CHECK(partition_problems(g, ds).size() == 1);
  g.groups = {{"a", {"r1", "r2", "r3"}}, {"b", {}}};
  CHECK(partition_problems(g, ds).size() == 1);
}

TEST_CASE("grouped dataset serialization is stable and round-trips") {
  Rng rng(5);
  auto ds = testing::random_dataset(rng, 80, 20, 4);
  for (auto g : {group_by_task(ds), group_by_length(ds, 5)}) {
    const auto a = grouped_string(g);
    CHECK(a == grouped_string(g));
    CHECK(grouped_from_json(Json::parse(a)) == g);
  }
  CHECK(grouped_string(group_by_length(ds, 5)) == grouped_string(group_by_length(ds, 5)));
}

TEST_CASE("embedding and reference files") {
  std::istringstream emb(R"({"id":"a","vector":[1,0.5]})"
                         "\n"
                         R"({"id":"b","vector":[0,2]})"
                         "\n");
  auto table = parse_embeddings(emb);
  CHECK(table.dim() == 2);
  CHECK(table.ids() == std::vector<std::string>{"a", "b"});
  std::stringstream out;
  write_embeddings(table, out);
  auto again = parse_embeddings(out);
  CHECK(*again.find("a") == *table.find("a"));

  std::istringstream bad(R"({"id":"a","vector":[1,0]})"
                         "\n"
                         R"({"id":"b","vector":[1,0,0]})"
                         "\n");
  try {
    parse_embeddings(bad, "e.jsonl");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  std::istringstream ref(R"({"label":"x","vector":[1,0]})"
                         "\n"
                         R"({"label":"x","vector":[0,1]})"
                         "\n");
  auto r = parse_reference(ref);
  CHECK(r.size() == 2);
  CHECK(r.label(1) == "x");
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_reference(empty), InputError);
}
