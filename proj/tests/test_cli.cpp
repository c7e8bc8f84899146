#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <sys/wait.h>

#include "commonit/io.hpp"
#include "commonit/pipeline.hpp"
#include "test_support.hpp"

using namespace commonit;

namespace {

const char* kSixRecords =
    R"({"id":"r1","instruction":"i","input":"","output":"a","task":"qa"})"
    "\n"
    R"({"id":"r2","instruction":"i","input":"","output":"a b","task":"qa"})"
    "\n"
    R"({"id":"r3","instruction":"i","input":"","output":"a b c","task":"mt"})"
    "\n"
    R"({"id":"r4","instruction":"i","input":"","output":"a b c d","task":"mt"})"
    "\n"
    R"({"id":"r5","instruction":"i","input":"","output":"a b c d e","task":"qa"})"
    "\n"
    R"({"id":"r6","instruction":"i","input":"","output":"a b c d e f","task":"sum"})"
    "\n";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const testing::TempDir& dir, const std::string& args) {
  const std::string out = dir.file("stdout.txt"), err = dir.file("stderr.txt");
  const std::string cmd = std::string(COMMONIT_CLI) + " " + args + " >" + out + " 2>" + err;
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::slurp(out), testing::slurp(err)};
}

}  // namespace

TEST_CASE("cli group by length on the six-record fixture") {
  testing::TempDir dir;
  const auto data = dir.write("six.jsonl", kSixRecords);
  const auto out = dir.file("run");
  auto r = run(dir, "group --dataset " + data + " --strategy length --bins 3 --out " + out);
  REQUIRE(r.code == 0);
  auto g = load_grouped(out + "/grouped.json");
  REQUIRE(g.groups.size() == 3);
  for (const auto& grp : g.groups) CHECK(grp.ids.size() == 2);
  const auto first = testing::slurp(out + "/grouped.json");
  CHECK(first.find("\"config\"") != std::string::npos);

  REQUIRE(run(dir, "group --dataset " + data + " --strategy length --bins 3 --out " + out).code == 0);
  CHECK(testing::slurp(out + "/grouped.json") == first);
}

TEST_CASE("cli error paths use distinct exit codes and JSON errors") {
  testing::TempDir dir;
  const auto unlabeled = dir.write("u.jsonl", R"({"id":"r1","instruction":"i","output":"o"})"
                                              "\n");
  auto r = run(dir, "group --dataset " + unlabeled + " --strategy task --out " + dir.file("o"));
  CHECK(r.code == 2);
  auto err = Json::parse(r.err);
  CHECK(err["error"]["kind"] == "input");
  CHECK(err["error"]["message"].get<std::string>().find("r1") != std::string::npos);

  CHECK(run(dir, "group --dataset " + dir.file("missing.jsonl") + " --out " + dir.file("o")).code == 2);
  CHECK(run(dir, "schedule --mode bogus").code == 2);
  CHECK(run(dir, "").code == 2);
}

TEST_CASE("cli schedule: verification, modes and seeds") {
  testing::TempDir dir;
  const auto data = dir.write("six.jsonl", kSixRecords);
  const auto out = dir.file("run");
  REQUIRE(run(dir, "group --dataset " + data + " --strategy task --out " + out).code == 0);

  auto r = run(dir, "schedule --out " + out + " --batch-size 2 --epochs 2 --seed 1");
  REQUIRE(r.code == 0);
  auto v = Json::parse(testing::slurp(out + "/verification.json"));
  CHECK(v["ok"] == true);
  CHECK(v["violations"].empty());

  std::ifstream m1(out + "/schedule.jsonl");
  auto s1 = parse_manifest(m1);
  CHECK(s1.config.mode == ScheduleMode::CommonIT);

  REQUIRE(run(dir, "schedule --out " + out + " --batch-size 2 --epochs 2 --seed 2").code == 0);
  std::ifstream m2(out + "/schedule.jsonl");
  auto s2 = parse_manifest(m2);
  auto epoch_ids = [](const Schedule& s, std::size_t e) {
    std::multiset<std::string> ids;
    for (const auto& st : s.steps)
      if (st.epoch == e) ids.insert(st.batch.record_ids.begin(), st.batch.record_ids.end());
    return ids;
  };
  CHECK(manifest_string(s1) != manifest_string(s2));
  for (std::size_t e = 0; e < 2; ++e) CHECK(epoch_ids(s1, e) == epoch_ids(s2, e));

  REQUIRE(run(dir, "schedule --out " + out + " --mode vanilla --batch-size 4").code == 0);
  std::ifstream m3(out + "/schedule.jsonl");
  std::string header;
  std::getline(m3, header);
  CHECK(Json::parse(header)["mode"] == "vanilla");

  REQUIRE(run(dir, "schedule --out " + out + " --mode sequential --tail drop --batch-size 2").code == 0);
  auto vd = Json::parse(testing::slurp(out + "/verification.json"));
  CHECK(vd["ok"] == true);
  CHECK(vd["expected_dropped_per_epoch"] == 2);  // qa:3, mt:2, sum:1

  CHECK(run(dir, "schedule --out " + out + " --tail drop --batch-size 9").code == 2);
}

TEST_CASE("cli train-demo") {
  testing::TempDir dir;
  const auto out = dir.file("demo");
  REQUIRE(run(dir, "train-demo --epochs 2 --out " + out).code == 0);
  const auto cmp = testing::slurp(out + "/comparison.json");
  auto j = Json::parse(cmp);
  CHECK(j.contains("final_loss_a"));
  CHECK(j.contains("final_loss_b"));
  auto steps = [](const std::string& path) {
    const auto text = testing::slurp(path);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) - 1;
  };
  CHECK(j["curve_a"].size() == steps(out + "/train_commonit.jsonl"));
  CHECK(j["curve_b"].size() == steps(out + "/train_vanilla.jsonl"));
  REQUIRE(run(dir, "train-demo --epochs 2 --out " + out).code == 0);
  CHECK(testing::slurp(out + "/comparison.json") == cmp);

  REQUIRE(run(dir, "train-demo --lr 0 --out " + out).code == 0);
  auto flat = Json::parse(testing::slurp(out + "/comparison.json"));
  for (const auto& x : flat["curve_a"]) CHECK(x.get<double>() == doctest::Approx(std::log(4.0)));
}

TEST_CASE("cli analyze") {
  testing::TempDir dir;
  const auto labels = dir.write("labels.jsonl", R"({"id":"a","label":"x"})"
                                                "\n"
                                                R"({"id":"b","label":"x"})"
                                                "\n"
                                                R"({"id":"c","label":"x"})"
                                                "\n");
  const auto out = dir.file("an");
  REQUIRE(run(dir, "analyze --analysis category-count --labels " + labels +
                       " --sample-size 2 --runs 3 --csv --out " + out)
              .code == 0);
  auto cc = Json::parse(testing::slurp(out + "/category_count.json"));
  CHECK(cc["vanilla"]["mean"] == 1.0);
  CHECK(testing::slurp(out + "/category_count.csv").rfind("sampling,run,count", 0) == 0);

  const auto vecs = dir.write("v.jsonl", R"({"id":"p","vector":[0,0]})"
                                         "\n"
                                         R"({"id":"q","vector":[1,0]})"
                                         "\n"
                                         R"({"id":"r","vector":[0,1]})"
                                         "\n");
  REQUIRE(run(dir, "analyze --analysis distance --vectors " + vecs + " --out " + out).code == 0);
  auto d = Json::parse(testing::slurp(out + "/distance.json"));
  CHECK(std::abs(d["mean_pairwise_distance"].get<double>() - 1.1381) < 1e-3);

  CHECK(run(dir, "analyze --analysis category-count --out " + out).code == 2);
}

TEST_CASE("cli embedding grouping and validate") {
  testing::TempDir dir;
  const auto data = dir.write("six.jsonl", kSixRecords);
  std::string emb, ref;
  for (int i = 1; i <= 6; ++i)
    emb += R"({"id":"r)" + std::to_string(i) + R"(","vector":[)" + (i % 2 ? "1,0.1" : "0.1,1") + "]}\n";
  ref = R"({"label":"odd","vector":[1,0]})"
        "\n"
        R"({"label":"even","vector":[0,1]})"
        "\n";
  const auto out = dir.file("e");
  REQUIRE(run(dir, "group --dataset " + data + " --strategy embedding --k 1 --embeddings " +
                       dir.write("emb.jsonl", emb) + " --reference " + dir.write("ref.jsonl", ref) +
                       " --csv --out " + out)
              .code == 0);
  auto g = load_grouped(out + "/grouped.json");
  REQUIRE(g.groups.size() == 2);
  CHECK(g.groups[0] == Group{"odd", {"r1", "r3", "r5"}});

  REQUIRE(run(dir, "validate --dataset " + data + " --out " + out).code == 0);
  auto v = Json::parse(testing::slurp(out + "/validation.json"));
  CHECK(v["record_count"] == 6);
  CHECK(v["task_coverage"] == 1.0);
}
