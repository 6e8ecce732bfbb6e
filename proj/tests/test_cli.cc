// Apache License, Version 2.0, refer to LICENSE.txt

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "cli.hh"
#include "oracles.hh"

using namespace socialrec;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A small synthetic corpus shared by the tests below.
const std::filesystem::path& data_dir() {
  static const auto dir = [] {
    auto d = oracle::scratch_dir("cli-data");
    const auto r = run({"synth", "--users", "40", "--items", "60", "--tag-count", "8", "--topics", "3",
                        "--events", "1500", "--group-events", "100", "--seed", "5", "--out",
                        d.string()});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

std::vector<std::string> train_args(const std::filesystem::path& out, std::string workers) {
  return {"train", "--data", data_dir().string(), "--variant", "cf+si+ic", "--topics", "3",
          "--max-iters", "6", "--workers", std::move(workers), "--combine-block", "64", "--out",
          out.string()};
}

}  // namespace

TEST_CASE("synth writes a loadable corpus") {
  const auto& dir = data_dir();
  for (const char* f : {"interactions.tsv", "friends.tsv", "tags.tsv", "groups.tsv", "planted.ckpt"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  const auto r = run({"inspect-influence", "--model", (dir / "planted.ckpt").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("mean_friend_influence_mass") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(run({"--help"}).code == cli::kExitOk);
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"train", "--topics", "three"}).code == cli::kExitUsage);
  CHECK(run({"train", "--data", data_dir().string(), "--variant", "cf+xx"}).code == cli::kExitUsage);

  const auto out = (oracle::scratch_dir("cli-codes") / "m.ckpt").string();
  const auto missing = run({"train", "--data", "/nonexistent/socialrec", "--out", out});
  CHECK(missing.code == cli::kExitDataError);

  const auto bad_dir = oracle::scratch_dir("cli-bad");
  std::ofstream(bad_dir / "interactions.tsv") << "u1\ti1\nu2\n";
  const auto bad = run({"train", "--data", bad_dir.string(), "--topics", "2", "--out", out});
  CHECK(bad.code == cli::kExitDataError);
  CHECK(bad.err.find("interactions.tsv:2") != std::string::npos);

  const auto unknown = run({"recommend", "--data", data_dir().string(), "--model",
                            (data_dir() / "planted.ckpt").string(), "--user", "nobody"});
  CHECK(unknown.code == cli::kExitDataError);
}

TEST_CASE("worker count does not change the checkpoint") {
  const auto dir = oracle::scratch_dir("cli-workers");
  const auto one = dir / "one.ckpt";
  const auto eight = dir / "eight.ckpt";
  REQUIRE(run(train_args(one, "1")).code == 0);
  REQUIRE(run(train_args(eight, "8")).code == 0);
  CHECK(slurp(one) == slurp(eight));

  // the same run twice gives the same bytes and the same recommendations
  const auto again = dir / "again.ckpt";
  REQUIRE(run(train_args(again, "1")).code == 0);
  CHECK(slurp(again) == slurp(one));
  const std::vector<std::string> rec{"recommend", "--data", data_dir().string(), "--model",
                                     one.string(), "--user", "u3", "--n", "5"};
  const auto a = run(rec);
  const auto b = run(rec);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("rank\titem_id\tscore\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : a.out) lines += c == '\n';
  CHECK(lines == 6);

  const auto report = run({"eval", "--data", data_dir().string(), "--model", one.string(),
                           "--holdout", "0", "--strategies", "avg,misery"});
  CHECK(report.code == 0);
  CHECK(report.out.find("precision\t5\t") != std::string::npos);
  CHECK(report.out.find("relative_ranking\tavg\t") != std::string::npos);
}

TEST_CASE("cf ignores the friends file with a warning") {
  const auto dir = oracle::scratch_dir("cli-cf");
  const auto r = run({"train", "--data", data_dir().string(), "--variant", "cf", "--topics", "2",
                      "--max-iters", "2", "--out", (dir / "cf.ckpt").string()});
  CHECK(r.code == 0);
  CHECK(r.err.find("ignores the friends file") != std::string::npos);
}

TEST_CASE("group recommendations and isolated members") {
  const auto model = (data_dir() / "planted.ckpt").string();
  // u0 and its first friend form a connected pair; a user sharing no edge
  // with u0 cannot be scored by the social strategy
  std::string first_friend;
  std::set<std::string> adjacent{"u0"};
  {
    std::ifstream in(data_dir() / "friends.tsv");
    std::string a;
    std::string b;
    while (in >> a >> b) {
      if (a == "u0" && b != "u0" && first_friend.empty()) first_friend = b;
      if (a == "u0") adjacent.insert(b);
      if (b == "u0") adjacent.insert(a);
    }
  }
  REQUIRE_FALSE(first_friend.empty());
  std::string stranger;
  for (int u = 1; u < 40 && stranger.empty(); ++u) {
    if (!adjacent.count("u" + std::to_string(u))) stranger = "u" + std::to_string(u);
  }
  REQUIRE_FALSE(stranger.empty());
  const auto isolated = run({"group", "--data", data_dir().string(), "--model", model, "--members",
                             "u0," + stranger});
  CHECK(isolated.code == cli::kExitDataError);
  CHECK(isolated.err.find(stranger) != std::string::npos);
  CHECK(run({"group", "--data", data_dir().string(), "--model", model, "--members", "u0," + stranger,
             "--strategy", "avg"})
            .code == cli::kExitOk);
  const auto ok = run({"group", "--data", data_dir().string(), "--model", model, "--members",
                       "u0," + first_friend, "--n", "3"});
  CHECK(ok.code == 0);

  const auto dup = run({"group", "--data", data_dir().string(), "--model", model, "--members", "u0"});
  CHECK(dup.code == cli::kExitUsage);
}

TEST_CASE("config file and data directory from the environment") {
  const auto dir = oracle::scratch_dir("cli-config");
  const auto config = dir / "train.ini";
  std::ofstream(config) << "[train]\ntopics = 2\nmax-iters = 3\nvariant = cf+si\n";
  ::setenv(cli::kDataDirEnv, data_dir().c_str(), 1);
  const auto trace = dir / "trace.tsv";
  const auto r = run({"--config", config.string(), "train", "--out", (dir / "m.ckpt").string(),
                      "--trace", trace.string()});
  ::unsetenv(cli::kDataDirEnv);
  CHECK(r.code == 0);
  std::size_t lines = 0;
  for (char c : slurp(trace)) lines += c == '\n';
  CHECK(lines == 3);
  const auto bytes = slurp(dir / "m.ckpt");
  REQUIRE(bytes.size() > 16);
  CHECK(bytes[12] == 2);  // K
}
