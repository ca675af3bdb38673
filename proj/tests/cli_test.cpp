// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/cli.h"

#include <gtest/gtest.h>
#include <unistd.h>

#include <fstream>
#include <set>
#include <sstream>

#include "ahems/key_io.h"
#include "ahems/service.h"
#include "ahems/similarity.h"
#include "ahems/store.h"
#include "json.hpp"

namespace ahems::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    static int counter = 0;
    dir_ = fs::temp_directory_path() /
           ("ahems_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run_args(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
  }
  std::string read(const std::string& name) {
    std::ifstream in(dir_ / name);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  void make_keys() {
    ASSERT_EQ(run_args({"keygen", "--bits", "512", "--insecure-test-keys", "--out", path("k")}),
              0)
        << err_.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, KeygenPolicy) {
  EXPECT_EQ(run_args({"keygen", "--bits", "512", "--out", path("k")}), kExitUsage);
  EXPECT_FALSE(fs::exists(dir_ / "k" / "public.json"));
  EXPECT_EQ(run_args({"keygen", "--bits", "768", "--insecure-test-keys", "--out", path("k")}),
            kExitUsage);
  make_keys();
  EXPECT_TRUE(fs::exists(dir_ / "k" / "public.json"));
  EXPECT_TRUE(fs::exists(dir_ / "k" / "private.json"));
  const ahe::KeyPair kp = ahe::load_keypair(dir_ / "k");
  EXPECT_TRUE(ahe::is_valid_pair(kp.pub, kp.priv));
  EXPECT_NE(out_.str().find(kp.pub.key_id().hex()), std::string::npos);
  EXPECT_EQ(run_args({"keygen", "--bits", "512", "--insecure-test-keys", "--out", path("k")}),
            kExitIo);
  EXPECT_EQ(run_args({"keygen", "--bits", "512", "--insecure-test-keys", "--force", "--out",
                      path("k")}),
            kExitOk);
}

TEST_F(CliTest, EncryptThenAuditRoundTrip) {
  write("in.jsonl",
        R"({"id":"a","values":[0.5,-0.25,1,0]})"
        "\n"
        R"({"id":"b","creator":"x","values":[1.5,2,-3,0.125]})"
        "\n"
        R"({"id":"c","values":[0.1,0.2,0.3,0.4]})"
        "\n");
  make_keys();
  ASSERT_EQ(run_args({"import", "--in", path("in.jsonl"), "--dim", "4", "--blocks", "2", "--out",
                      path("db")}),
            0)
      << err_.str();
  ASSERT_EQ(run_args({"encrypt-db", "--db", path("db"), "--keys", path("k"), "--out", path("edb")}),
            0)
      << err_.str();
  EXPECT_NE(out_.str().find("budget: d=4"), std::string::npos);
  ASSERT_EQ(run_args({"audit", "--db", path("edb"), "--keys", path("k"), "--out", path("a.jsonl")}),
            0);
  std::ifstream in(dir_ / "a.jsonl");
  EmbeddingSet back = store::ingest_jsonl(in, BlockSchema::equal_partition(4, 2));
  EmbeddingSet orig = store::load_plain_db(dir_ / "db");
  ASSERT_EQ(back.vectors.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.vectors[i].id, orig.vectors[i].id);
    EXPECT_EQ(back.vectors[i].creator, orig.vectors[i].creator);
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_NEAR(back.vectors[i].values[j], orig.vectors[i].values[j], 0.5 / 65536);
    }
  }
}

TEST_F(CliTest, EmptyInputAndScaleRefusals) {
  write("empty.jsonl", "");
  make_keys();
  ASSERT_EQ(run_args({"import", "--in", path("empty.jsonl"), "--dim", "8", "--out", path("db")}), 0);
  ASSERT_EQ(run_args({"encrypt-db", "--db", path("db"), "--keys", path("k"), "--out", path("edb")}),
            0);
  EXPECT_NE(err_.str().find("warning"), std::string::npos);
  EXPECT_EQ(store::load_encrypted_db(dir_ / "edb").vectors.size(), 0u);

  // A scale whose encodings no longer fit 53-bit integers is refused up front.
  EXPECT_EQ(run_args({"import", "--in", path("empty.jsonl"), "--dim", "8", "--max-abs", "1e12",
                      "--out", path("db2")}),
            kExitValidation);
  write("big.jsonl", R"({"id":"a","values":[5,0]})" "\n");
  EXPECT_EQ(run_args({"import", "--in", path("big.jsonl"), "--dim", "2", "--blocks", "1", "--out",
                      path("db3")}),
            kExitValidation);
  EXPECT_EQ(run_args({"import", "--in", path("missing.jsonl"), "--dim", "2", "--out", path("db4")}),
            kExitIo);
}

TEST_F(CliTest, SearchSelfQueryAndErrors) {
  ASSERT_EQ(run_args({"synth", "--n", "15", "--dim", "16", "--normalize", "--seed", "4", "--out",
                      path("db")}),
            0);
  EmbeddingSet db = store::load_plain_db(dir_ / "db");
  write("q.jsonl", store::to_jsonl({db.vectors[9]}));
  make_keys();
  for (auto extra : std::vector<std::vector<std::string>>{{}, {"--keys", path("k")}}) {
    std::vector<std::string> args{"search", "--query", path("q.jsonl"), "--db", path("db"),
                                  "--k", "1", "--out", path("r.json")};
    args.insert(args.end(), extra.begin(), extra.end());
    ASSERT_EQ(run_args(args), 0) << err_.str();
    auto j = nlohmann::json::parse(read("r.json"));
    EXPECT_EQ(j["results"][0]["id"], db.vectors[9].id);
  }
  ASSERT_EQ(run_args({"encrypt-db", "--db", path("db"), "--keys", path("k"), "--out", path("edb")}),
            0);
  ASSERT_EQ(run_args({"search", "--query", path("q.jsonl"), "--db", path("edb"), "--keys",
                      path("k"), "--k", "1"}),
            0);
  EXPECT_NE(out_.str().find("encrypted_db"), std::string::npos);
  EXPECT_NE(out_.str().find(db.vectors[9].id), std::string::npos);

  EXPECT_EQ(run_args({"search", "--query", path("q.jsonl"), "--db", path("edb"), "--keys",
                      path("nokeys")}),
            kExitMissingKey);
  EXPECT_EQ(run_args({"search", "--query", path("q.jsonl"), "--db", path("edb")}),
            kExitMissingKey);
  ASSERT_EQ(run_args({"keygen", "--bits", "512", "--insecure-test-keys", "--out", path("k2")}), 0);
  EXPECT_EQ(run_args({"search", "--query", path("q.jsonl"), "--db", path("edb"), "--keys",
                      path("k2")}),
            kExitKeyMismatch);
  EXPECT_EQ(run_args({"search", "--query", path("q.jsonl"), "--db", path("db"), "--kind", "cosine"}),
            kExitUsage);
  EXPECT_EQ(run_args({"search", "--query", path("q.jsonl"), "--db", path("db"), "--kind",
                      "weighted", "--weights", "1,1"}),
            kExitValidation);
  EXPECT_EQ(run_args({"frobnicate"}), kExitUsage);
}

TEST_F(CliTest, OneHotWeightsChangeRanking) {
  // "a" agrees with the query on rhythm, "b" on melody.
  write("db.jsonl",
        R"({"id":"a","values":[1,1,-1,-1]})"
        "\n"
        R"({"id":"b","values":[-1,-1,1,1]})"
        "\n");
  write("q.jsonl", R"({"id":"q","values":[1,1,1,1]})" "\n");
  ASSERT_EQ(run_args({"import", "--in", path("db.jsonl"), "--dim", "4", "--blocks",
                      "rhythm,melody", "--out", path("db")}),
            0);
  make_keys();
  ASSERT_EQ(run_args({"encrypt-db", "--db", path("db"), "--keys", path("k"), "--out", path("edb")}),
            0);
  std::vector<std::string> top;
  for (const char* w : {"1,0", "0,1"}) {
    ASSERT_EQ(run_args({"search", "--query", path("q.jsonl"), "--db", path("edb"), "--keys",
                        path("k"), "--kind", "weighted", "--weights", w, "--out", path("r.json")}),
              0)
        << err_.str();
    top.push_back(nlohmann::json::parse(read("r.json"))["results"][0]["id"]);
  }
  EXPECT_EQ(top, (std::vector<std::string>{"a", "b"}));
}

TEST_F(CliTest, BenchDefaultDimsGiveTwelveRows) {
  ASSERT_EQ(run_args({"bench", "--bits", "512", "--insecure-test-keys", "--n", "2", "--reps", "5",
                      "--warmup", "0", "--out", path("b.csv")}),
            0)
      << err_.str();
  const std::string csv = read("b.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
  EXPECT_TRUE(fs::exists(dir_ / "b_ratios.csv"));
  EXPECT_EQ(run_args({"bench", "--n", "2", "--out", path("c.csv"), "--bits", "512"}), kExitUsage);
  EXPECT_EQ(run_args({"bench", "--n", "0", "--settings", "plaintext", "--out", path("c.csv")}),
            kExitValidation);
}

TEST_F(CliTest, AttackCommands) {
  ASSERT_EQ(run_args({"attack", "pattern", "--dim", "32", "--bits", "512", "--insecure-test-keys",
                      "--seed", "5", "--out", path("p.json")}),
            0)
      << err_.str();
  auto j = nlohmann::json::parse(read("p.json"));
  EXPECT_GE(j["encrypted"]["metrics"]["auc"].get<double>(), 0.95);
  EXPECT_TRUE(j["decisions_match"].get<bool>());

  ASSERT_EQ(run_args({"attack", "creator", "--dim", "16", "--per-artist", "5", "--trials", "4",
                      "--bits", "512", "--insecure-test-keys", "--out", path("c.json")}),
            0)
      << err_.str();
  auto c = nlohmann::json::parse(read("c.json"));
  EXPECT_EQ(c["trials"].size(), 4u);
  EXPECT_EQ(run_args({"attack", "creator", "--artists", "1", "--bits", "512",
                      "--insecure-test-keys"}),
            kExitUsage);
  EXPECT_EQ(run_args({"attack", "membership"}), kExitUsage);
}

TEST_F(CliTest, RemoteSearchMatchesLocal) {
  ASSERT_EQ(run_args({"synth", "--n", "20", "--dim", "16", "--seed", "8", "--out", path("db")}), 0);
  codec::ScaleConfig cfg;
  EmbeddingSet db = store::load_plain_db(dir_ / "db", &cfg);
  service::ServiceOptions opts;
  opts.allow_insecure_keys = true;
  service::SearchService svc(db, cfg, opts);
  service::Server server(svc);
  const int port = server.start({"127.0.0.1", 0});
  write("q.jsonl", store::to_jsonl({db.vectors[3]}));
  make_keys();
  ASSERT_EQ(run_args({"search", "--query", path("q.jsonl"), "--remote",
                      "http://127.0.0.1:" + std::to_string(port), "--keys", path("k"), "--k",
                      "20", "--out", path("r.json")}),
            0)
      << err_.str();
  auto j = nlohmann::json::parse(read("r.json"));
  EXPECT_EQ(j["setting"], "encrypted_query");
  std::vector<std::string> ids;
  for (const auto& r : j["results"]) ids.push_back(r["id"]);
  EXPECT_EQ(ids, engine::topk_search(db.vectors[3], db, 20, engine::ScoreKind::kPlain, nullptr).ids());
  server.stop();
}

TEST(ExitCodeTest, DistinctPerClass) {
  std::set<int> codes;
  for (ErrorKind k : {ErrorKind::kUsage, ErrorKind::kValidation, ErrorKind::kBudget,
                      ErrorKind::kKeyMismatch, ErrorKind::kMissingKey, ErrorKind::kIo,
                      ErrorKind::kIntegrity}) {
    const int code = exit_code(k);
    EXPECT_NE(code, 0);
    codes.insert(code);
  }
  EXPECT_EQ(codes.size(), 7u);
}

TEST(ParseTest, BlocksWeightsDims) {
  EXPECT_EQ(parse_blocks("4", 128).block(1).label, "melody");
  EXPECT_EQ(parse_blocks("a,b,c", 9).block(2).offset, 6u);
  BlockSchema s = parse_blocks("x:3,y:5", 8);
  EXPECT_EQ(s.block(1).length, 5u);
  EXPECT_THROW(parse_blocks("x:3,y:4", 8), Error);
  EXPECT_THROW(parse_blocks("0", 8), Error);
  EXPECT_EQ(parse_weights("1,0.5,-2").weights, (std::vector<double>{1, 0.5, -2}));
  EXPECT_THROW(parse_weights("1,x"), Error);
  EXPECT_EQ(parse_dims("128,256"), (std::vector<std::size_t>{128, 256}));
  EXPECT_THROW(parse_dims("128,0"), Error);
}

}  // namespace
}  // namespace ahems::cli
