// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end CLI checks driving the leaftrain binary.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "leafnet/binio.hpp"
#include "leafnet/rng.hpp"

#ifndef LEAFTRAIN_BIN
#define LEAFTRAIN_BIN "leaftrain"
#endif

using namespace leafnet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("leafnet_cli_" + std::to_string(Rng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& child = "") const { return (path / child).string(); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LEAFTRAIN_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string micro_config(const TempDir& tmp) {
  std::ostringstream cfg;
  cfg << "seed = 5\n"
      << "data.labels_csv = " << tmp.str("data/labels.csv") << "\n"
      << "data.images_dir = " << tmp.str("data/images") << "\n"
      << "data.unlabeled_dir = " << tmp.str("data/unlabeled") << "\n"
      << "model.stem_channels = 4\n"
      << "model.stages = 8:1:2:2\n"
      << "model.input_resolution = 16\n"
      << "train.epochs = 2\n"
      << "augment.channel_mean = 0.5, 0.5, 0.5\n"
      << "augment.channel_std = 0.5, 0.5, 0.5\n"
      << "selftrain.iterations = 1\n"
      << "selftrain.growth = 1,1,1\n"
      << "synthetic.count = 24\n"
      << "synthetic.size = 16\n"
      << "synthetic.unlabeled_count = 6\n";
  return cfg.str();
}

std::string read_all(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("missing config is a usage error (exit 1)") {
  TempDir tmp;
  CHECK(run_cli("train --config " + tmp.str("missing.cfg") + " --out " + tmp.str("out")) == 1);
  CHECK(run_cli("train --out " + tmp.str("out")) == 1);  // no --config at all
}

TEST_CASE("full pipeline: make-synthetic, train, evaluate, predict, ensemble") {
  TempDir tmp;
  write_text(tmp.str("run.cfg"), micro_config(tmp));
  const std::string cfg = " --config " + tmp.str("run.cfg");

  REQUIRE(run_cli("make-synthetic" + cfg + " --out " + tmp.str("data")) == 0);
  REQUIRE(fs::exists(tmp.str("data/labels.csv")));
  REQUIRE(fs::exists(tmp.str("data/unlabeled")));

  REQUIRE(run_cli("train" + cfg + " --out " + tmp.str("run1")) == 0);
  REQUIRE(fs::exists(tmp.str("run1/checkpoint.ckpt")));
  REQUIRE(fs::exists(tmp.str("run1/report.kv")));
  const std::string report = read_all(tmp.str("run1/report.kv"));
  CHECK(report.find("val.mean_auc") != std::string::npos);
  CHECK(report.find("seed = 5") != std::string::npos);

  CHECK(run_cli("evaluate" + cfg + " --checkpoint " + tmp.str("run1/checkpoint.ckpt") +
                " --out " + tmp.str("eval1")) == 0);
  CHECK(read_all(tmp.str("eval1/report.kv")).find("eval.mean_auc") != std::string::npos);

  CHECK(run_cli("predict" + cfg + " --checkpoint " + tmp.str("run1/checkpoint.ckpt") + " --out " +
                tmp.str("pred1")) == 0);
  const std::string csv = read_all(tmp.str("pred1/predictions.csv"));
  CHECK(csv.rfind("image_id,healthy,multiple_diseases,rust,scab\n", 0) == 0);

  CHECK(run_cli("ensemble" + cfg + " --checkpoints " + tmp.str("run1/checkpoint.ckpt") + " " +
                tmp.str("run1/checkpoint.ckpt") + " --out " + tmp.str("ens1")) == 0);
  CHECK(read_all(tmp.str("ens1/report.kv")).find("ensemble.mean_auc") != std::string::npos);

  CHECK(run_cli("augment-preview" + cfg + " --count 2 --out " + tmp.str("prev")) == 0);
  CHECK(fs::exists(tmp.str("prev/before_0.ppm")));
  CHECK(fs::exists(tmp.str("prev/after_1.ppm")));

  CHECK(run_cli("scale-search" + cfg + " --out " + tmp.str("search")) == 0);
  CHECK(read_all(tmp.str("search/report.kv")).find("candidate.0") != std::string::npos);
}

TEST_CASE("corrupted checkpoints are a data error (exit 2)") {
  TempDir tmp;
  write_text(tmp.str("run.cfg"), micro_config(tmp));
  const std::string cfg = " --config " + tmp.str("run.cfg");
  REQUIRE(run_cli("make-synthetic" + cfg + " --out " + tmp.str("data")) == 0);
  REQUIRE(run_cli("train" + cfg + " --out " + tmp.str("run1")) == 0);

  std::string bytes = read_file_bytes(tmp.str("run1/checkpoint.ckpt"));
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x20);
  write_file_bytes(tmp.str("run1/checkpoint.ckpt"), bytes);
  CHECK(run_cli("evaluate" + cfg + " --checkpoint " + tmp.str("run1/checkpoint.ckpt") + " --out " +
                tmp.str("eval_bad")) == 2);
}

TEST_CASE("non-finite training is a numeric error (exit 3)") {
  TempDir tmp;
  // an absurd SGD learning rate explodes the weights into inf logits
  // (adam's normalized steps keep even lr 1e18 finite)
  write_text(tmp.str("run.cfg"),
             micro_config(tmp) + "train.optimizer = sgd\ntrain.lr0 = 1e18\n");
  const std::string cfg = " --config " + tmp.str("run.cfg");
  REQUIRE(run_cli("make-synthetic" + cfg + " --out " + tmp.str("data")) == 0);
  CHECK(run_cli("train" + cfg + " --out " + tmp.str("boom")) == 3);
}

TEST_CASE("selftrain is reproducible from (config, seed)") {
  TempDir tmp;
  write_text(tmp.str("run.cfg"), micro_config(tmp));
  const std::string cfg = " --config " + tmp.str("run.cfg");
  REQUIRE(run_cli("make-synthetic" + cfg + " --out " + tmp.str("data")) == 0);
  REQUIRE(run_cli("selftrain" + cfg + " --out " + tmp.str("st1")) == 0);
  REQUIRE(run_cli("selftrain" + cfg + " --out " + tmp.str("st2")) == 0);
  const std::string a = read_all(tmp.str("st1/report.kv"));
  const std::string b = read_all(tmp.str("st2/report.kv"));
  CHECK(a == b);
  CHECK(a.find("iteration.1.val_mean_auc") != std::string::npos);

  // a different seed changes results
  REQUIRE(run_cli("selftrain" + cfg + " --seed 9 --out " + tmp.str("st3")) == 0);
  CHECK(read_all(tmp.str("st3/report.kv")) != a);
}

TEST_SUITE_END();
