#include <doctest.h>

#include <cstdlib>
#include <json.hpp>
#include <sys/wait.h>

#include "support.hpp"

#ifndef KEEP_CLI_PATH
#error "KEEP_CLI_PATH must point at the keep executable"
#endif

namespace fs = std::filesystem;
using testsupport::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run keep_cli(const fs::path& dir, const std::string& args) {
  const fs::path log = dir / "cli.log";
  const std::string cmd = "cd '" + dir.string() + "' && '" + KEEP_CLI_PATH + "' " + args + " > '" +
                          log.string() + "' 2>&1";
  const int rc = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.output = testsupport::slurp(log);
  fs::remove(log);
  return r;
}

void small_chain(const fs::path& dir) {
  for (const std::string s : {
           "gen-synth --dir . --n-concepts 200 --n-patients 800 --seed 3",
           "build-graph --dir .",
           "walk --dir . --walks-per-node 4 --walk-length 10 --seed 3",
           "train-n2v --dir . --dim 8 --seed 3",
           "build-cooc --dir .",
           "train-keep --dir . --dim 8 --epochs 3 --learning-rate 0.005 --seed 3",
           "train-glove --dir . --dim 8 --epochs 3 --learning-rate 0.005 --seed 3",
       }) {
    const auto r = keep_cli(dir, s);
    INFO(s << "\n" << r.output);
    REQUIRE(r.code == 0);
  }
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("short chain runs end to end and records manifests") {
  TempDir dir;
  small_chain(dir.path());
  for (const std::string s : {
           "eval-impact --dir . --emb node2vec=anchor.emb --emb keep=keep.emb --repetitions 2 --top-k 5 --sample 40 --seed 1",
           "eval-intrinsic --dir . --repetitions 5 --bootstrap 20 --seed 1",
           "compare --dir . --repetitions 5 --bootstrap 20 --seed 1",
           "report --dir . --out report.txt",
       }) {
    const auto r = keep_cli(dir.path(), s);
    INFO(s << "\n" << r.output);
    REQUIRE(r.code == 0);
  }
  for (const char* f : {"ontology.tsv", "graph.tsv", "vocab.tsv", "walks.txt", "anchor.emb",
                        "cooc.tsv", "keep.emb", "keep_loss.csv", "glove.emb", "impact.json",
                        "intrinsic.json", "compare.json", "report.txt"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  const auto manifest = nlohmann::json::parse(testsupport::slurp(dir / "train-keep.manifest.json"));
  CHECK(manifest["stage"] == "train-keep");
  CHECK(std::stod(manifest["config"]["lambda"].get<std::string>()) == 1e-3);
  CHECK(manifest["outputs"].size() == 2);
  CHECK(manifest["outputs"][0]["sha256"].get<std::string>().size() == 64);
}

TEST_CASE("unknown subcommand and bad flags exit with 3") {
  TempDir dir;
  CHECK(keep_cli(dir.path(), "bogus").code == 3);
  CHECK(keep_cli(dir.path(), "train-keep --dim notanumber").code == 3);
}

TEST_CASE("missing input exits with 2") {
  TempDir dir;
  const auto r = keep_cli(dir.path(), "build-graph --dir .");
  CHECK(r.code == 2);
  CHECK(r.output.find("ontology.tsv") != std::string::npos);
}

TEST_CASE("invalid configuration exits with 3 and names the field") {
  TempDir dir;
  small_chain(dir.path());
  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "epochs = 2\nlearning_rate = -1\n";
  }
  const auto r = keep_cli(dir.path(), "train-keep --dir . --config bad.cfg");
  CHECK(r.code == 3);
  CHECK(r.output.find("learning_rate") != std::string::npos);
  CHECK(keep_cli(dir.path(), "train-glove --dir . --config bad.cfg").code == 3);
  CHECK(keep_cli(dir.path(), "train-keep --dir . --dim 0").code == 3);
}

TEST_CASE("divergence exits with 4") {
  TempDir dir;
  small_chain(dir.path());
  const auto r = keep_cli(dir.path(), "train-keep --dir . --dim 8 --epochs 2 --learning-rate 1e300");
  CHECK(r.code == 4);
  CHECK(r.output.find("epoch") != std::string::npos);
}

TEST_CASE("same seed reproduces every artifact byte for byte") {
  TempDir a, b;
  small_chain(a.path());
  small_chain(b.path());
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a.path())) {
    const auto name = e.path().filename().string();
    INFO(name);
    CHECK(testsupport::slurp(e.path()) == testsupport::slurp(b / name));
    ++compared;
  }
  CHECK(compared > 10);
}

}  // TEST_SUITE
