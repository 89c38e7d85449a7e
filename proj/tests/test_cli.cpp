/* Copyright 2026 The mmce Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "mmce/label_store.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "mmce_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Run cli(const std::string& args) {
  const auto out = workdir() / "stdout.txt", err = workdir() / "stderr.txt";
  const std::string cmd = std::string("cd ") + workdir().string() + " && " + MMCE_CLI_PATH + " " +
                          args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

void write(const std::string& name, const std::string& text) {
  std::ofstream(workdir() / name, std::ios::binary) << text;
}

// The three-worker table with its original 1..3 labels.
void write_table() {
  std::ostringstream csv;
  csv << "worker,item,label\n";
  const int table[3][6] = {{1, 2, 2, 1, 3, 2}, {2, 1, 2, 2, 1, 3}, {1, 1, 1, 2, 2, 3}};
  for (int j = 0; j < 6; ++j) {
    for (int i = 0; i < 3; ++i) csv << "w" << i + 1 << ",i" << j + 1 << ',' << table[i][j] << '\n';
  }
  write("table.csv", csv.str());
  write("table_gold.csv", "item,label\ni1,1\ni2,1\ni3,2\ni4,2\ni5,3\ni6,3\n");
}

void write_planted() {
  auto data = oracle::planted(3, 4, 12, 60, 5, 0.75);
  std::ostringstream labels, gold;
  mmce::write_labels(labels, data.labels);
  gold << "item,label\n";
  for (std::size_t j = 0; j < data.truth.size(); ++j) gold << "i" << j << ',' << data.truth[j] << '\n';
  write("planted.csv", labels.str());
  write("planted_gold.csv", gold.str());
}

}  // namespace

TEST_CASE("stats") {
  write_table();
  auto r = cli("stats --labels table.csv --classes 3 --label-base 1");
  CHECK(r.code == 0);
  CHECK(r.out.find("# classes") != std::string::npos);
  CHECK(r.out.find("        3         6         3        18") != std::string::npos);
  CHECK(r.out.find("worker error") == std::string::npos);

  r = cli("stats --labels table.csv --classes 3 --label-base 1 --gold table_gold.csv");
  CHECK(r.code == 0);
  // Disagreements with gold: 3 + 2 + 2 of 18.
  CHECK(r.out.find("average worker error rate 38.89%") != std::string::npos);
}

TEST_CASE("missing or malformed input exits with 2") {
  auto r = cli("stats --labels nope.csv --classes 3");
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
  write("bad.csv", "w1,i1,9\n");
  r = cli("stats --labels bad.csv --classes 3");
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.csv:1:") != std::string::npos);
  CHECK(cli("").code == 2);
  CHECK(cli("frobnicate").code == 2);
}

TEST_CASE("majority vote through the CLI") {
  write_table();
  auto r = cli("aggregate --labels table.csv --classes 3 --label-base 1 --method mv --out mv.tsv");
  CHECK(r.code == 0);
  const auto tsv = slurp(workdir() / "mv.tsv");
  CHECK(tsv.rfind("item\tpredicted\tp0\tp1\tp2\ni1\t0\t0.666667\t0.333333\t0.000000\n", 0) == 0);
  CHECK_FALSE(fs::exists(workdir() / "mv.params.tsv"));
}

TEST_CASE("gamma resolves alpha and beta") {
  std::ostringstream csv;
  for (int j = 0; j < 7; ++j) {
    for (int i = 0; i < 7; ++i) csv << "w" << i << ",i" << j << ',' << (i + j) % 7 << '\n';
  }
  write("seven.csv", csv.str());
  auto r = cli("aggregate --labels seven.csv --classes 7 --gamma 1 --out seven.tsv --max-iters 3");
  CHECK((r.code == 0 || r.code == 1));
  CHECK(r.out.find("alpha=49 ") != std::string::npos);
  CHECK(r.out.find("beta=49 ") != std::string::npos);
  CHECK(fs::exists(workdir() / "seven.params.tsv"));
  CHECK(slurp(workdir() / "seven.params.tsv").rfind("# mode=multiclass classes=7 variant=euclidean alpha=49 beta=49", 0) == 0);
}

TEST_CASE("hyperparameter flag conflicts") {
  write_table();
  const std::string base = "aggregate --labels table.csv --classes 3 --label-base 1 --out x.tsv ";
  CHECK(cli(base).code == 2);
  CHECK(cli(base + "--alpha 1").code == 2);
  CHECK(cli(base + "--alpha 1 --beta 1 --gamma 1").code == 2);
  CHECK(cli(base + "--method mv --gamma 1").code == 2);
  CHECK(cli(base + "--method nope").code == 2);
  auto r = cli(base + "--gamma 1 --mode ordinal --variant centered");
  CHECK(r.code == 2);
  CHECK(r.err.find("centered") != std::string::npos);
  CHECK(cli(base + "--alpha 1 --beta 2").code == 0);
}

TEST_CASE("non-convergence exits with 1 and still writes outputs") {
  write_planted();
  fs::remove(workdir() / "short.tsv");
  auto r = cli("aggregate --labels planted.csv --classes 4 --gamma 1 --max-iters 1 --tol 1e-300 "
                "--out short.tsv --trace short_trace.csv");
  CHECK(r.code == 1);
  CHECK(r.err.find("not converged") != std::string::npos);
  CHECK(fs::exists(workdir() / "short.tsv"));
  CHECK(slurp(workdir() / "short_trace.csv").find("1,e_step,") != std::string::npos);
}

TEST_CASE("Dawid-Skene through the CLI") {
  write_planted();
  auto r = cli("aggregate --labels planted.csv --classes 4 --method ds --out ds.tsv --trace ds.csv");
  CHECK(r.code == 0);
  CHECK(slurp(workdir() / "ds.params.tsv").find("prior\t-\t3\t3\t") != std::string::npos);
}

TEST_CASE("select writes a report and can refit") {
  write_planted();
  const std::string args =
      "select --labels planted.csv --classes 4 --folds 3 --grid 0.5,1,2 --max-iters 40 --seed 7 ";
  auto r = cli(args + "--out cv.csv --fit-final");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("selected gamma=", 0) == 0);
  const auto report = slurp(workdir() / "cv.csv");
  CHECK(report.rfind("gamma,fold,heldout_loglik\n0.5,0,", 0) == 0);
  CHECK(report.find("# selected gamma=") != std::string::npos);
  CHECK(fs::exists(workdir() / "cv.posterior.tsv"));
  CHECK(fs::exists(workdir() / "cv.params.tsv"));

  auto again = cli(args + "--out cv2.csv --threads 2");
  CHECK(again.code == 0);
  CHECK(slurp(workdir() / "cv2.csv") == report);

  CHECK(cli(args + "--out cv3.csv --folds 1").code == 2);

  r = cli(args + "--out val.csv --gold planted_gold.csv");
  CHECK(r.code == 0);
  CHECK(slurp(workdir() / "val.csv").rfind("gamma,error_rate\n", 0) == 0);
}

TEST_CASE("evaluate") {
  write_planted();
  REQUIRE(cli("aggregate --labels planted.csv --classes 4 --method mv --out ev.tsv").code == 0);

  // Perfect predictions: the gold file is the predicted column itself.
  auto table = mmce::load_posterior(workdir() / "ev.tsv");
  std::ostringstream perfect;
  for (std::size_t j = 0; j < table.items.size(); ++j) {
    perfect << table.items.name(j) << ',' << table.predicted[j] << '\n';
  }
  write("perfect.csv", perfect.str());
  auto r = cli("evaluate --posterior ev.tsv --gold perfect.csv");
  CHECK(r.code == 0);
  CHECK(r.out.find("error rate        0.00%") != std::string::npos);
  CHECK(r.out.find("mean square error") == std::string::npos);

  r = cli("evaluate --posterior ev.tsv --gold planted_gold.csv --mode ordinal --bins --out ev.csv");
  CHECK(r.code == 0);
  CHECK(r.out.find("mean square error") != std::string::npos);
  for (const char* bin : {"(0.0, 0.5]", "(0.5, 0.6]", "(0.6, 0.7]", "(0.7, 0.8]", "(0.8, 0.9]", "(0.9, 1.0]"}) {
    CHECK(r.out.find(bin) != std::string::npos);
  }
  CHECK(slurp(workdir() / "ev.csv").rfind("row,lower,upper,items,error_rate,mse\noverall,", 0) == 0);

  write("broken.tsv", "item\tpredicted\tp0\n");
  CHECK(cli("evaluate --posterior broken.tsv --gold planted_gold.csv").code == 2);
}

TEST_CASE("repeated commands produce identical files") {
  write_planted();
  const std::string args = "aggregate --labels planted.csv --classes 4 --gamma 0.5 --trace ";
  REQUIRE(cli(args + "t1.csv --out r1.tsv").code == 0);
  REQUIRE(cli(args + "t2.csv --out r2.tsv").code == 0);
  CHECK(slurp(workdir() / "r1.tsv") == slurp(workdir() / "r2.tsv"));
  CHECK(slurp(workdir() / "r1.params.tsv") == slurp(workdir() / "r2.params.tsv"));
  CHECK(slurp(workdir() / "t1.csv") == slurp(workdir() / "t2.csv"));
}
