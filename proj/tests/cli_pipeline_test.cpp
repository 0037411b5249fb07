// End-to-end exercise of the CLI binary: simulate -> fit -> effects ->
// evaluate, plus exit-code and byte-determinism contracts. The binary path
// arrives as argv[1].

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int failures = 0;

#define CHECK_MSG(cond, msg)                                              \
  do {                                                                    \
    if (!(cond)) {                                                        \
      std::cerr << "[FAIL] " << __FILE__ << ':' << __LINE__ << ' ' << msg \
                << '\n';                                                  \
      ++failures;                                                         \
    }                                                                     \
  } while (0)

std::string g_binary;

int run_cli(const std::string& args) {
  const std::string cmd = g_binary + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

bool same_bytes(const fs::path& a, const fs::path& b) { return slurp(a) == slurp(b); }

int count_data_rows(const fs::path& path) {
  std::ifstream is(path);
  std::string line;
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#') ++rows;
  return rows;
}

bool header_has_seed(const fs::path& path) {
  std::ifstream is(path);
  std::string line;
  if (!std::getline(is, line)) return false;
  return line.rfind("# seed=", 0) == 0 && line.find("config=") != std::string::npos &&
         line.find("version=") != std::string::npos;
}

// Synthetic two-group table shaped like the breast-cancer study: 28
// covariates, 64 = 41+23 and 134 = 106+28 rows.
void write_cancer_shaped_csv(const fs::path& path, int zeros, int ones, unsigned seed) {
  std::ofstream os(path);
  os << "y";
  for (int j = 2; j <= 29; ++j) os << ",x" << j;
  os << '\n';
  unsigned state = seed;
  auto next_unit = [&]() {
    state = state * 1664525u + 1013904223u;
    return (state >> 8) / 16777216.0 - 0.5;
  };
  for (int i = 0; i < zeros + ones; ++i) {
    os << (i < zeros ? 0 : 1);
    for (int j = 0; j < 28; ++j) os << ',' << next_unit();
    os << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_pipeline_test <path-to-cli>\n";
    return 1;
  }
  g_binary = argv[1];

  const fs::path root = fs::path("cli_pipeline_tmp");
  fs::remove_all(root);
  fs::create_directories(root);
  const auto dir = [&](const std::string& name) {
    return (root / name).string();
  };

  // --- simulate ------------------------------------------------------
  CHECK_MSG(run_cli("--seed 7 --out-dir " + dir("sim_a") +
                    " simulate --q 6 --n1 80 --n2 60 --xi 0.2") == 0,
            "simulate exits 0");
  for (const char* f : {"group1.csv", "group2.csv", "truth_dag1.csv", "truth_dag2.csv",
                        "truth_L1.csv", "truth_L2.csv", "truth_D.csv", "truth_meta.csv"}) {
    CHECK_MSG(fs::exists(root / "sim_a" / f), std::string("simulate wrote ") + f);
    CHECK_MSG(header_has_seed(root / "sim_a" / f),
              std::string(f) + " carries the seed/config/version header");
  }
  CHECK_MSG(count_data_rows(root / "sim_a" / "group1.csv") == 81,
            "group1.csv has header + 80 rows");

  // same seed, same bytes
  CHECK_MSG(run_cli("--seed 7 --out-dir " + dir("sim_b") +
                    " simulate --q 6 --n1 80 --n2 60 --xi 0.2") == 0,
            "second simulate exits 0");
  for (const char* f : {"group1.csv", "group2.csv", "truth_meta.csv"})
    CHECK_MSG(same_bytes(root / "sim_a" / f, root / "sim_b" / f),
              std::string("simulate determinism: ") + f);

  // shape check: q=3, n=5 -> y plus x2,x3
  CHECK_MSG(run_cli("--seed 3 --out-dir " + dir("sim_small") +
                    " simulate --q 3 --n1 5 --n2 5 --xi 0.2") == 0,
            "small simulate exits 0");
  {
    std::ifstream is(root / "sim_small" / "group1.csv");
    std::string line;
    std::getline(is, line);  // comment
    std::getline(is, line);  // header
    CHECK_MSG(line == "y,x2,x3", "data CSV header is y,x2,x3");
    CHECK_MSG(count_data_rows(root / "sim_small" / "group1.csv") == 6,
              "q=3, n=5 data CSV has 5 rows plus header");
  }

  // --- fit -----------------------------------------------------------
  const std::string fit_args = " fit --group1 " + dir("sim_a") + "/group1.csv --group2 " +
                               dir("sim_a") + "/group2.csv --iters 300 --burnin 50 --xi 0.2";
  CHECK_MSG(run_cli("--seed 9 --out-dir " + dir("fit_a") + fit_args) == 0, "fit exits 0");
  for (const char* f :
       {"edge_prob_group1.csv", "edge_prob_group2.csv", "dag_est_group1.csv",
        "dag_est_group2.csv", "partial_mean_group1.csv", "partial_mean_group2.csv",
        "theta_trace.csv", "trace.csv", "fit_meta.csv"})
    CHECK_MSG(fs::exists(root / "fit_a" / f), std::string("fit wrote ") + f);
  CHECK_MSG(count_data_rows(root / "fit_a" / "edge_prob_group1.csv") == 6,
            "edge probability matrix is q x q");
  {
    std::ifstream is(root / "fit_a" / "edge_prob_group1.csv");
    std::string line;
    std::getline(is, line);  // comment
    bool in_range = true;
    while (std::getline(is, line)) {
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ','))
        if (const double v = std::stod(cell); v < 0.0 || v > 1.0) in_range = false;
    }
    CHECK_MSG(in_range, "edge probabilities lie in [0,1]");
  }

  CHECK_MSG(run_cli("--seed 9 --out-dir " + dir("fit_b") + fit_args) == 0,
            "second fit exits 0");
  for (const char* f : {"trace.csv", "edge_prob_group1.csv", "theta_trace.csv",
                        "partial_mean_group2.csv", "fit_meta.csv"})
    CHECK_MSG(same_bytes(root / "fit_a" / f, root / "fit_b" / f),
              std::string("fit determinism: ") + f);

  // --- effects -------------------------------------------------------
  CHECK_MSG(run_cli("--out-dir " + dir("eff_a") + " effects --fit-dir " + dir("fit_a")) == 0,
            "effects exits 0");
  CHECK_MSG(count_data_rows(root / "eff_a" / "effects.csv") == 1 + 2 * 5,
            "effects.csv has one row per (group, target)");
  CHECK_MSG(run_cli("--out-dir " + dir("eff_bad") + " effects --fit-dir " + dir("fit_a") +
                    " --target 1") == 2,
            "intervening on node 1 exits 2");
  CHECK_MSG(run_cli("--out-dir " + dir("eff_missing") + " effects --fit-dir " +
                    dir("no_such_fit")) == 4,
            "missing trace exits 4");

  // degenerate band on a single kept iteration
  CHECK_MSG(run_cli("--seed 5 --out-dir " + dir("fit_one") + " fit --group1 " +
                    dir("sim_a") + "/group1.csv --group2 " + dir("sim_a") +
                    "/group2.csv --iters 31 --burnin 30 --xi 0.2") == 0,
            "single-record fit exits 0");
  CHECK_MSG(run_cli("--out-dir " + dir("eff_one") + " effects --fit-dir " + dir("fit_one")) ==
                0,
            "effects on a single-record trace exits 0");
  {
    std::ifstream is(root / "eff_one" / "effects.csv");
    std::string line;
    std::getline(is, line);
    std::getline(is, line);  // header row
    bool degenerate = true;
    while (std::getline(is, line)) {
      std::stringstream ss(line);
      std::vector<std::string> cells;
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() == 6 && (cells[3] != cells[4] || cells[4] != cells[5]))
        degenerate = false;
    }
    CHECK_MSG(degenerate, "single-iteration trace yields degenerate bands");
  }

  // --- evaluate (files mode) ------------------------------------------
  CHECK_MSG(run_cli("--out-dir " + dir("eval_a") + " evaluate --truth-dir " + dir("sim_a") +
                    " --fit-dir " + dir("fit_a")) == 0,
            "evaluate exits 0");
  for (const char* f : {"metrics.csv", "effect_errors.csv", "roc_points.csv"})
    CHECK_MSG(fs::exists(root / "eval_a" / f), std::string("evaluate wrote ") + f);
  CHECK_MSG(slurp(root / "eval_a" / "metrics.csv").find("auc,") != std::string::npos,
            "metrics.csv contains an auc row");
  CHECK_MSG(run_cli("--out-dir " + dir("eval_b") + " evaluate --truth-dir " + dir("sim_a") +
                    " --fit-dir " + dir("fit_a")) == 0,
            "second evaluate exits 0");
  CHECK_MSG(same_bytes(root / "eval_a" / "metrics.csv", root / "eval_b" / "metrics.csv"),
            "evaluate determinism: metrics.csv");

  // truth/fit dimension mismatch
  CHECK_MSG(run_cli("--seed 3 --out-dir " + dir("sim_q4") +
                    " simulate --q 4 --n1 40 --n2 40 --xi 0.2") == 0,
            "q=4 simulate exits 0");
  CHECK_MSG(run_cli("--out-dir " + dir("eval_mismatch") + " evaluate --truth-dir " +
                    dir("sim_q4") + " --fit-dir " + dir("fit_a")) == 2,
            "dimension mismatch exits 2");

  // --- ingestion error paths ------------------------------------------
  {
    std::ofstream os(root / "schema_a.csv");
    os << "y,x2,x3\n1,0.1,0.2\n0,0.3,0.4\n0,0.0,0.1\n";
  }
  {
    std::ofstream os(root / "schema_b.csv");
    os << "y,x2,xZZ\n1,0.1,0.2\n0,0.3,0.4\n0,0.0,0.1\n";
  }
  CHECK_MSG(run_cli("--out-dir " + dir("fit_schema") + " fit --group1 " +
                    (root / "schema_a.csv").string() + " --group2 " +
                    (root / "schema_b.csv").string() + " --iters 20 --burnin 5") == 2,
            "schema mismatch exits 2");
  {
    std::ofstream os(root / "nonbinary.csv");
    os << "y,x2,x3\n2,0.1,0.2\n0,0.3,0.4\n";
  }
  CHECK_MSG(run_cli("--out-dir " + dir("fit_nonbin") + " fit --group1 " +
                    (root / "nonbinary.csv").string() + " --group2 " +
                    (root / "schema_a.csv").string() + " --iters 20 --burnin 5") == 2,
            "non-binary y exits 2");
  CHECK_MSG(run_cli("--out-dir " + dir("fit_missing") + " fit --group1 " +
                    (root / "does_not_exist.csv").string() + " --group2 " +
                    (root / "schema_a.csv").string()) == 4,
            "missing input file exits 4");

  // --- breast-cancer-shaped ingestion ---------------------------------
  write_cancer_shaped_csv(root / "er_neg.csv", 41, 23, 11);
  write_cancer_shaped_csv(root / "er_pos.csv", 106, 28, 13);
  CHECK_MSG(count_data_rows(root / "er_neg.csv") == 65, "ER- table has 64 rows + header");
  CHECK_MSG(count_data_rows(root / "er_pos.csv") == 135, "ER+ table has 134 rows + header");
  CHECK_MSG(run_cli("--seed 21 --out-dir " + dir("fit_cancer") + " fit --group1 " +
                    (root / "er_neg.csv").string() + " --group2 " +
                    (root / "er_pos.csv").string() + " --iters 60 --burnin 20") == 0,
            "28-covariate two-group table ingests and runs");
  CHECK_MSG(count_data_rows(root / "fit_cancer" / "edge_prob_group1.csv") == 29,
            "cancer-shaped fit emits a 29x29 heat map");

  // --- evaluate (grid mode) --------------------------------------------
  {
    std::ofstream os(root / "grid.conf");
    os << "# tiny benchmark grid\n[grid]\nqs = 4\nsample_sizes = 30x30\n"
       << "xis = 0.2\nreplications = 2\niters = 120\nburnin = 30\n";
  }
  CHECK_MSG(run_cli("--seed 31 --threads 2 --out-dir " + dir("eval_grid") +
                    " evaluate --grid " + (root / "grid.conf").string()) == 0,
            "grid evaluate exits 0");
  CHECK_MSG(fs::exists(root / "eval_grid" / "grid_metrics.csv"), "grid metrics written");
  CHECK_MSG(fs::exists(root / "eval_grid" / "grid_runs.csv"), "grid runs written");
  CHECK_MSG(fs::exists(root / "eval_grid" / "auc_table_xi0.2.csv"), "auc table written");
  CHECK_MSG(slurp(root / "eval_grid" / "grid_metrics.csv").find("wall_time") !=
                std::string::npos,
            "grid metrics include wall time");

  if (failures == 0) {
    std::cout << "cli pipeline: all checks passed\n";
    fs::remove_all(root);
    return 0;
  }
  std::cerr << "cli pipeline: " << failures << " check(s) failed; artifacts kept in "
            << root << '\n';
  return 1;
}
