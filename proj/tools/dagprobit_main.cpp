// Command-line front end: simulate | fit | effects | evaluate.
//
// Exit codes: 0 success, 2 validation error, 3 numeric error, 4 I/O error.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dagprobit/causal.hpp"
#include "dagprobit/cholesky.hpp"
#include "dagprobit/dag.hpp"
#include "dagprobit/io.hpp"
#include "dagprobit/mcmc.hpp"
#include "dagprobit/model.hpp"
#include "dagprobit/simlab.hpp"
#include "dagprobit/trace_io.hpp"
#include "dagprobit/version.hpp"

namespace fs = std::filesystem;
using namespace dagprobit;

namespace {

void write_keyvalue_csv(const fs::path& path, const std::string& header,
                        const std::vector<std::pair<std::string, std::string>>& rows) {
  auto os = open_output(path);
  os << header << '\n' << "key,value\n";
  for (const auto& [k, v] : rows) os << k << ',' << v << '\n';
}

std::map<std::string, std::string> read_keyvalue_csv(const fs::path& path) {
  auto is = open_input(path);
  std::map<std::string, std::string> out;
  std::string line;
  bool saw_header = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      saw_header = true;  // "key,value"
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) throw IoError(path.string() + ": expected key,value rows");
    out[cells[0]] = cells[1];
  }
  return out;
}

double meta_double(const std::map<std::string, std::string>& meta, const std::string& key,
                   const std::string& file) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw IoError(file + ": missing key '" + key + "'");
  return parse_double(it->second, file);
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
}

void write_with_header(const fs::path& path, const std::string& header,
                       const std::function<void(std::ostream&)>& body) {
  auto os = open_output(path);
  os << header << '\n';
  body(os);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  ScenarioConfig cfg;
};

int run_simulate(const SimulateArgs& args, std::uint64_t seed, const fs::path& out_dir) {
  ensure_out_dir(out_dir);
  const Scenario sc = generate_scenario(args.cfg, seed);

  const std::map<std::string, std::string> cfg_kv{
      {"subcommand", "simulate"},
      {"q", std::to_string(args.cfg.q)},
      {"n1", std::to_string(args.cfg.n1)},
      {"n2", std::to_string(args.cfg.n2)},
      {"xi", format_double(args.cfg.xi)},
      {"coef_min", format_double(args.cfg.coef_min)},
      {"coef_max", format_double(args.cfg.coef_max)},
      {"noise_min", format_double(args.cfg.noise_min)},
      {"noise_max", format_double(args.cfg.noise_max)},
      {"theta_min", format_double(args.cfg.theta_min)},
      {"theta_max", format_double(args.cfg.theta_max)},
  };
  const std::string header = file_header(seed, config_hash(cfg_kv));

  {
    auto os = open_output(out_dir / "group1.csv");
    write_group_csv(os, sc.data1, header);
  }
  {
    auto os = open_output(out_dir / "group2.csv");
    write_group_csv(os, sc.data2, header);
  }
  for (int k = 0; k < 2; ++k) {
    const std::string suffix = std::to_string(k + 1);
    write_with_header(out_dir / ("truth_dag" + suffix + ".csv"), header,
                      [&](std::ostream& os) { save_adjacency_csv(os, sc.dag(k)); });
    write_with_header(out_dir / ("truth_L" + suffix + ".csv"), header,
                      [&](std::ostream& os) { write_matrix_csv(os, k == 0 ? sc.L1 : sc.L2); });
  }
  write_with_header(out_dir / "truth_D.csv", header,
                    [&](std::ostream& os) { write_matrix_csv(os, sc.D); });

  std::vector<std::pair<std::string, std::string>> meta(cfg_kv.begin(), cfg_kv.end());
  meta.emplace_back("theta", format_double(sc.theta));
  meta.emplace_back("seed", std::to_string(seed));
  write_keyvalue_csv(out_dir / "truth_meta.csv", header, meta);

  std::cout << "simulate: wrote scenario (q=" << args.cfg.q << ", n1=" << args.cfg.n1
            << ", n2=" << args.cfg.n2 << ", xi=" << args.cfg.xi << ") to "
            << out_dir.string() << '\n';
  return 0;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
  std::string group1_path;
  std::string group2_path;
  Hyperparams hyper;
  double a_override = -1.0;
  double g1_override = -1.0;
  double g2_override = -1.0;
  double x_tilde = 1.0;
  double init_zero_tol = 0.1;
  bool no_center = false;
  bool skip_partials = false;
  bool approx_proposal_ratio = false;
};

std::string join_columns(const std::vector<std::string>& cols) {
  std::string out;
  for (const auto& c : cols) {
    if (!out.empty()) out += ';';
    out += c;
  }
  return out;
}

int run_fit(const FitArgs& args, std::uint64_t seed, const fs::path& out_dir) {
  ensure_out_dir(out_dir);
  auto is1 = open_input(args.group1_path);
  auto is2 = open_input(args.group2_path);
  GroupCsv g1 = read_group_csv(is1, args.group1_path);
  GroupCsv g2 = read_group_csv(is2, args.group2_path);
  if (g1.columns != g2.columns)
    throw ValidationError("fit: group column schemas differ: [" + join_columns(g1.columns) +
                          "] vs [" + join_columns(g2.columns) + "]");
  if (!args.no_center) {
    for (GroupCsv* g : {&g1, &g2})
      g->data.x_obs.rowwise() -= g->data.x_obs.colwise().mean().eval();
  }

  const int q = g1.data.q();
  Hyperparams hyper = args.hyper;
  hyper.a = args.a_override > 0 ? args.a_override : static_cast<double>(q);
  hyper.g1 = args.g1_override > 0 ? args.g1_override : 1.0 / g1.data.n();
  hyper.g2 = args.g2_override > 0 ? args.g2_override : 1.0 / g2.data.n();
  hyper.approx_proposal_ratio = args.approx_proposal_ratio;

  ChainOptions options;
  options.x_tilde = args.x_tilde;
  options.init_zero_tol = args.init_zero_tol;
  options.record_partials = !args.skip_partials;

  const std::map<std::string, std::string> cfg_kv{
      {"subcommand", "fit"},
      {"q", std::to_string(q)},
      {"n1", std::to_string(g1.data.n())},
      {"n2", std::to_string(g2.data.n())},
      {"iters", std::to_string(hyper.iters)},
      {"burnin", std::to_string(hyper.burnin)},
      {"a", format_double(hyper.a)},
      {"g1", format_double(hyper.g1)},
      {"g2", format_double(hyper.g2)},
      {"xi", format_double(hyper.xi)},
      {"sigma0_sq", format_double(hyper.sigma0_sq)},
      {"edge_threshold", format_double(hyper.edge_threshold)},
      {"x_tilde", format_double(args.x_tilde)},
      {"centered", args.no_center ? "0" : "1"},
      {"approx_proposal_ratio", hyper.approx_proposal_ratio ? "1" : "0"},
  };
  const std::string header = file_header(seed, config_hash(cfg_kv));

  Rng rng(seed);
  const ChainTrace trace = run_chain(g1.data, g2.data, hyper, options, rng);

  for (int k = 0; k < 2; ++k) {
    const std::string suffix = std::to_string(k + 1);
    const Eigen::MatrixXd probs = edge_probabilities(trace, k);
    write_with_header(out_dir / ("edge_prob_group" + suffix + ".csv"), header,
                      [&](std::ostream& os) { write_matrix_csv(os, probs); });

    write_with_header(out_dir / ("dag_est_group" + suffix + ".csv"), header,
                      [&](std::ostream& os) {
                        for (int i = 0; i < q; ++i) {
                          for (int j = 0; j < q; ++j) {
                            if (j) os << ',';
                            os << (probs(i, j) > hyper.edge_threshold ? 1 : 0);
                          }
                          os << '\n';
                        }
                      });

    if (options.record_partials) {
      Eigen::MatrixXd mean_rho = Eigen::MatrixXd::Zero(q, q);
      for (const auto& rho : trace.partials[k]) mean_rho += rho;
      mean_rho /= static_cast<double>(trace.kept());
      write_with_header(out_dir / ("partial_mean_group" + suffix + ".csv"), header,
                        [&](std::ostream& os) { write_matrix_csv(os, mean_rho); });
    }
  }

  write_with_header(out_dir / "theta_trace.csv", header, [&](std::ostream& os) {
    os << "iter,theta\n";
    for (int t = 0; t < trace.kept(); ++t)
      os << (trace.burnin + t + 1) << ',' << format_double(trace.theta[t]) << '\n';
  });

  {
    auto os = open_output(out_dir / "trace.csv");
    write_trace_csv(os, trace, header);
  }

  std::vector<std::pair<std::string, std::string>> meta(cfg_kv.begin(), cfg_kv.end());
  meta.emplace_back("seed", std::to_string(seed));
  std::string targets;
  for (int s : trace.effect_targets) {
    if (!targets.empty()) targets += ';';
    targets += std::to_string(s + 1);
  }
  meta.emplace_back("effect_targets", targets);
  meta.emplace_back("dag_accept_rate_1",
                    format_double(static_cast<double>(trace.dag_accepts[0]) /
                                  static_cast<double>(trace.dag_proposals[0])));
  meta.emplace_back("dag_accept_rate_2",
                    format_double(static_cast<double>(trace.dag_accepts[1]) /
                                  static_cast<double>(trace.dag_proposals[1])));
  meta.emplace_back("theta_accept_rate",
                    format_double(static_cast<double>(trace.theta_accepts) /
                                  static_cast<double>(trace.theta_proposals)));
  write_keyvalue_csv(out_dir / "fit_meta.csv", header, meta);

  std::cout << "fit: " << trace.kept() << " kept iterations (q=" << q
            << ", n1=" << g1.data.n() << ", n2=" << g2.data.n() << ") written to "
            << out_dir.string() << '\n';
  return 0;
}

// ----------------------------------------------------------------- effects

struct EffectsArgs {
  std::string fit_dir;
  std::vector<int> targets;  // 1-based node labels
  double x_tilde = std::numeric_limits<double>::quiet_NaN();
};

int run_effects(const EffectsArgs& args, const fs::path& out_dir) {
  ensure_out_dir(out_dir);
  const fs::path fit_dir = args.fit_dir;
  const auto meta = read_keyvalue_csv(fit_dir / "fit_meta.csv");
  auto is = open_input(fit_dir / "trace.csv");
  ChainTrace trace = read_trace_csv(is);
  trace.x_tilde = meta_double(meta, "x_tilde", "fit_meta.csv");
  const auto seed = static_cast<std::uint64_t>(meta_double(meta, "seed", "fit_meta.csv"));

  double x_tilde = trace.x_tilde;
  if (!std::isnan(args.x_tilde)) {
    if (args.x_tilde != trace.x_tilde)
      throw ValidationError(
          "effects: requested x_tilde differs from the one recorded at fit time (" +
          format_double(trace.x_tilde) + "); re-run fit with --x-tilde");
    x_tilde = args.x_tilde;
  }

  std::vector<int> targets;
  if (args.targets.empty()) {
    targets = trace.effect_targets;
  } else {
    for (int label : args.targets) {
      if (label == 1)
        throw ValidationError("effects: cannot intervene on node 1 (the latent response)");
      if (label < 1 || label > trace.q)
        throw ValidationError("effects: target node out of range: " + std::to_string(label));
      targets.push_back(label - 1);
    }
  }

  const std::map<std::string, std::string> cfg_kv{{"subcommand", "effects"},
                                                  {"x_tilde", format_double(x_tilde)}};
  const std::string header = file_header(seed, config_hash(cfg_kv));

  write_with_header(out_dir / "effects.csv", header, [&](std::ostream& os) {
    os << "group,node,x_tilde,mean,q2.5,q97.5\n";
    for (int k = 0; k < 2; ++k) {
      for (int s : targets) {
        const EffectEstimate e = bma_effects(trace, k, s, x_tilde);
        os << (k + 1) << ',' << (s + 1) << ',' << format_double(x_tilde) << ','
           << format_double(e.mean) << ',' << format_double(e.lo95) << ','
           << format_double(e.hi95) << '\n';
      }
    }
  });
  std::cout << "effects: wrote " << (2 * targets.size()) << " rows to "
            << (out_dir / "effects.csv").string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string truth_dir;
  std::string fit_dir;
  std::string grid_config;
  int replications = -1;
};

Scenario load_truth(const fs::path& truth_dir) {
  const auto meta = read_keyvalue_csv(truth_dir / "truth_meta.csv");
  const int q = static_cast<int>(meta_double(meta, "q", "truth_meta.csv"));
  Scenario sc(q);
  sc.config.q = q;
  sc.theta = meta_double(meta, "theta", "truth_meta.csv");
  {
    auto is = open_input(truth_dir / "truth_dag1.csv");
    sc.dag1 = load_adjacency_csv(is);
  }
  {
    auto is = open_input(truth_dir / "truth_dag2.csv");
    sc.dag2 = load_adjacency_csv(is);
  }
  {
    auto is = open_input(truth_dir / "truth_L1.csv");
    sc.L1 = read_matrix_csv(is, "truth_L1.csv");
  }
  {
    auto is = open_input(truth_dir / "truth_L2.csv");
    sc.L2 = read_matrix_csv(is, "truth_L2.csv");
  }
  {
    auto is = open_input(truth_dir / "truth_D.csv");
    sc.D = read_matrix_csv(is, "truth_D.csv").col(0);
  }
  if (sc.dag1.node_count() != q || sc.L1.rows() != q || sc.D.size() != q)
    throw ValidationError("evaluate: truth bundle dimensions disagree with truth_meta.csv");
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(q, q);
  sc.sigma1 = reconstruct_precision({sc.L1, sc.D}).llt().solve(eye);
  sc.sigma2 = reconstruct_precision({sc.L2, sc.D}).llt().solve(eye);
  return sc;
}

int run_evaluate_files(const EvaluateArgs& args, const fs::path& out_dir) {
  ensure_out_dir(out_dir);
  const Scenario sc = load_truth(args.truth_dir);
  const fs::path fit_dir = args.fit_dir;
  const auto fit_meta = read_keyvalue_csv(fit_dir / "fit_meta.csv");
  auto is = open_input(fit_dir / "trace.csv");
  ChainTrace trace = read_trace_csv(is);
  trace.x_tilde = meta_double(fit_meta, "x_tilde", "fit_meta.csv");
  if (trace.q != sc.config.q)
    throw ValidationError("evaluate: truth has q=" + std::to_string(sc.config.q) +
                          " but the fit used q=" + std::to_string(trace.q));
  const auto seed =
      static_cast<std::uint64_t>(meta_double(fit_meta, "seed", "fit_meta.csv"));

  const EvalReport rep = evaluate_run(sc, trace);

  const std::map<std::string, std::string> cfg_kv{{"subcommand", "evaluate"},
                                                  {"mode", "files"},
                                                  {"q", std::to_string(sc.config.q)}};
  const std::string header = file_header(seed, config_hash(cfg_kv));

  write_keyvalue_csv(out_dir / "metrics.csv", header,
                     {{"auc", format_double(rep.auc)},
                      {"partial_err_mean", format_double(rep.partial_err_mean)},
                      {"partial_err_abs", format_double(rep.partial_err_abs)},
                      {"theta_mean", format_double(rep.theta_mean)},
                      {"theta_lo95", format_double(rep.theta_lo95)},
                      {"theta_hi95", format_double(rep.theta_hi95)},
                      {"theta_err", format_double(rep.theta_err)},
                      {"theta_covered", rep.theta_covered ? "1" : "0"},
                      {"theta_true", format_double(sc.theta)}});

  write_with_header(out_dir / "effect_errors.csv", header, [&](std::ostream& os) {
    os << "group,node,error\n";
    for (const auto& e : rep.effect_err)
      os << (e.group + 1) << ',' << (e.node + 1) << ',' << format_double(e.error) << '\n';
  });

  write_with_header(out_dir / "roc_points.csv", header, [&](std::ostream& os) {
    os << "fpr,tpr\n";
    for (const auto& [fpr, tpr] : rep.roc.points)
      os << format_double(fpr) << ',' << format_double(tpr) << '\n';
  });

  std::cout << "evaluate: auc=" << rep.auc << " partial_abs=" << rep.partial_err_abs
            << " theta_err=" << rep.theta_err << " -> " << out_dir.string() << '\n';
  return 0;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

GridConfig parse_grid_config(const fs::path& path) {
  const ConfigMap cfg = load_config(path);
  GridConfig grid;
  std::map<std::string, std::string> kv;
  if (const auto it = cfg.find(""); it != cfg.end()) kv = it->second;
  if (const auto it = cfg.find("grid"); it != cfg.end())
    for (const auto& [k, v] : it->second) kv[k] = v;

  const auto get = [&](const std::string& key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (const auto* v = get("qs")) {
    grid.qs.clear();
    for (const auto& s : split_list(*v, ',')) grid.qs.push_back(std::stoi(s));
  }
  if (const auto* v = get("sample_sizes")) {
    grid.sample_sizes.clear();
    for (const auto& pair : split_list(*v, ',')) {
      const auto parts = split_list(pair, 'x');
      if (parts.size() != 2)
        throw ValidationError("grid config: sample_sizes entries look like 200x200");
      grid.sample_sizes.emplace_back(std::stoi(parts[0]), std::stoi(parts[1]));
    }
  }
  if (const auto* v = get("xis")) {
    grid.xis.clear();
    for (const auto& s : split_list(*v, ',')) grid.xis.push_back(parse_double(s, "grid"));
  }
  if (const auto* v = get("replications")) grid.replications = std::stoi(*v);
  if (const auto* v = get("iters")) grid.iters = std::stoi(*v);
  if (const auto* v = get("burnin")) grid.burnin = std::stoi(*v);
  if (const auto* v = get("x_tilde")) grid.x_tilde = parse_double(*v, "grid");
  if (const auto* v = get("coef_min")) grid.base.coef_min = parse_double(*v, "grid");
  if (const auto* v = get("coef_max")) grid.base.coef_max = parse_double(*v, "grid");
  if (const auto* v = get("noise_min")) grid.base.noise_min = parse_double(*v, "grid");
  if (const auto* v = get("noise_max")) grid.base.noise_max = parse_double(*v, "grid");
  if (const auto* v = get("theta_min")) grid.base.theta_min = parse_double(*v, "grid");
  if (const auto* v = get("theta_max")) grid.base.theta_max = parse_double(*v, "grid");
  return grid;
}

int run_evaluate_grid(const EvaluateArgs& args, std::uint64_t seed, int threads,
                      const fs::path& out_dir) {
  ensure_out_dir(out_dir);
  GridConfig grid = parse_grid_config(args.grid_config);
  if (args.replications > 0) grid.replications = args.replications;

  const std::map<std::string, std::string> cfg_kv{
      {"subcommand", "evaluate"},
      {"mode", "grid"},
      {"replications", std::to_string(grid.replications)},
      {"iters", std::to_string(grid.iters)},
      {"burnin", std::to_string(grid.burnin)}};
  const std::string header = file_header(seed, config_hash(cfg_kv));

  const auto cells = run_grid(grid, seed, threads);
  for (const auto& cell : cells)
    if (cell.skipped) std::cerr << "warning: " << cell.note << '\n';

  write_with_header(out_dir / "grid_metrics.csv", header, [&](std::ostream& os) {
    os << "q,n1,n2,xi,replications,completed,partial,mean_auc,mean_partial_err,"
          "mean_partial_abs_err,mean_theta_abs_err,mean_effect_abs_err,mean_wall_time_s\n";
    for (const auto& c : cells) {
      if (c.skipped) continue;
      os << c.q << ',' << c.n1 << ',' << c.n2 << ',' << format_double(c.xi) << ','
         << c.runs.size() << ',' << c.replications_done << ',' << (c.partial ? 1 : 0) << ','
         << format_double(c.mean_auc) << ',' << format_double(c.mean_partial_err) << ','
         << format_double(c.mean_partial_abs_err) << ','
         << format_double(c.mean_theta_abs_err) << ','
         << format_double(c.mean_effect_abs_err) << ','
         << format_double(c.mean_wall_time_s) << '\n';
    }
  });

  write_with_header(out_dir / "grid_runs.csv", header, [&](std::ostream& os) {
    os << "q,n1,n2,xi,rep,seed,ok,auc,partial_err_mean,partial_err_abs,theta_err,"
          "wall_time_s,error\n";
    for (const auto& c : cells) {
      for (const auto& r : c.runs) {
        os << c.q << ',' << c.n1 << ',' << c.n2 << ',' << format_double(c.xi) << ','
           << r.rep << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ','
           << (r.ok ? format_double(r.report.auc) : "") << ','
           << (r.ok ? format_double(r.report.partial_err_mean) : "") << ','
           << (r.ok ? format_double(r.report.partial_err_abs) : "") << ','
           << (r.ok ? format_double(r.report.theta_err) : "") << ','
           << (r.ok ? format_double(r.report.wall_time_s) : "") << ',' << r.error << '\n';
      }
    }
  });

  // Table-1 layout: one AUC table per xi, sample sizes down, q across.
  for (double xi : grid.xis) {
    std::ostringstream name;
    name << "auc_table_xi" << xi << ".csv";
    write_with_header(out_dir / name.str(), header, [&](std::ostream& os) {
      os << "n1,n2";
      for (int q : grid.qs) os << ",q" << q;
      os << '\n';
      for (const auto& [n1, n2] : grid.sample_sizes) {
        os << n1 << ',' << n2;
        for (int q : grid.qs) {
          std::string value;
          for (const auto& c : cells)
            if (c.q == q && c.n1 == n1 && c.n2 == n2 && c.xi == xi && !c.skipped)
              value = format_double(c.mean_auc);
          os << ',' << value;
        }
        os << '\n';
      }
    });
  }

  std::cout << "evaluate: grid of " << cells.size() << " cells written to "
            << out_dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-group Gaussian DAG-probit structure learning and causal effects"};
  app.set_config("--config", "", "flat key=value config file with [subcommand] sections");
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir = ".";
  app.add_option("--seed", seed, "random seed recorded in every output")
      ->capture_default_str();
  app.add_option("--threads", threads, "worker cap for grid evaluation (0 = hardware)")
      ->capture_default_str();
  app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();

  SimulateArgs sim;
  auto* cmd_sim = app.add_subcommand("simulate", "draw a ground-truth scenario and data");
  cmd_sim->add_option("--q", sim.cfg.q, "number of nodes (node 1 is the response)")
      ->capture_default_str();
  cmd_sim->add_option("--n1", sim.cfg.n1, "group 1 sample size")->capture_default_str();
  cmd_sim->add_option("--n2", sim.cfg.n2, "group 2 sample size")->capture_default_str();
  cmd_sim->add_option("--xi", sim.cfg.xi, "edge-inclusion probability")
      ->capture_default_str();
  cmd_sim->add_option("--coef-min", sim.cfg.coef_min, "min |L| coefficient")
      ->capture_default_str();
  cmd_sim->add_option("--coef-max", sim.cfg.coef_max, "max |L| coefficient")
      ->capture_default_str();
  cmd_sim->add_option("--noise-min", sim.cfg.noise_min, "min conditional variance")
      ->capture_default_str();
  cmd_sim->add_option("--noise-max", sim.cfg.noise_max, "max conditional variance")
      ->capture_default_str();
  cmd_sim->add_option("--theta-min", sim.cfg.theta_min, "cut-off lower bound")
      ->capture_default_str();
  cmd_sim->add_option("--theta-max", sim.cfg.theta_max, "cut-off upper bound")
      ->capture_default_str();

  FitArgs fit;
  auto* cmd_fit = app.add_subcommand("fit", "run the MCMC sampler on two group CSVs");
  cmd_fit->add_option("--group1", fit.group1_path, "group 1 data CSV")->required();
  cmd_fit->add_option("--group2", fit.group2_path, "group 2 data CSV")->required();
  cmd_fit->add_option("--iters", fit.hyper.iters, "total MCMC iterations")
      ->capture_default_str();
  cmd_fit->add_option("--burnin", fit.hyper.burnin, "burn-in iterations to discard")
      ->capture_default_str();
  cmd_fit->add_option("--xi", fit.hyper.xi, "edge-inclusion prior probability")
      ->capture_default_str();
  cmd_fit->add_option("--edge-threshold", fit.hyper.edge_threshold,
                      "posterior probability cut for the estimated DAG")
      ->capture_default_str();
  cmd_fit->add_option("--sigma0-sq", fit.hyper.sigma0_sq, "cut-off proposal variance")
      ->capture_default_str();
  cmd_fit->add_option("--a", fit.a_override, "DAG-Wishart shape base (default q)");
  cmd_fit->add_option("--g1", fit.g1_override, "group 1 prior scale (default 1/n1)");
  cmd_fit->add_option("--g2", fit.g2_override, "group 2 prior scale (default 1/n2)");
  cmd_fit->add_option("--x-tilde", fit.x_tilde, "intervention level recorded in the trace")
      ->capture_default_str();
  cmd_fit->add_option("--init-zero-tol", fit.init_zero_tol,
                      "|L| threshold for the initial DAG estimate")
      ->capture_default_str();
  cmd_fit->add_flag("--no-center", fit.no_center, "skip column-centering of covariates");
  cmd_fit->add_flag("--skip-partials", fit.skip_partials,
                    "do not record per-iteration partial correlations");
  cmd_fit->add_flag("--approx-proposal-ratio", fit.approx_proposal_ratio,
                    "use the sparse-case q-ratio approximation (exact ratio is default)");

  EffectsArgs eff;
  auto* cmd_eff = app.add_subcommand("effects", "summarize causal effects from a fit");
  cmd_eff->add_option("--fit-dir", eff.fit_dir, "directory with fit outputs")->required();
  cmd_eff->add_option("--target", eff.targets,
                      "intervention node label (2..q); repeatable, default all");
  cmd_eff->add_option("--x-tilde", eff.x_tilde, "intervention level (must match the fit)");

  EvaluateArgs ev;
  auto* cmd_ev = app.add_subcommand("evaluate", "score a fit against truth, or run a grid");
  cmd_ev->add_option("--truth-dir", ev.truth_dir, "simulate output directory");
  cmd_ev->add_option("--fit-dir", ev.fit_dir, "fit output directory");
  cmd_ev->add_option("--grid", ev.grid_config, "grid config file (runs the benchmark)");
  cmd_ev->add_option("--replications", ev.replications, "override grid replications");

  try {
    app.parse(argc, argv);
    if (threads <= 0)
      threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (cmd_sim->parsed()) return run_simulate(sim, seed, out_dir);
    if (cmd_fit->parsed()) return run_fit(fit, seed, out_dir);
    if (cmd_eff->parsed()) return run_effects(eff, out_dir);
    if (cmd_ev->parsed()) {
      if (!ev.grid_config.empty()) return run_evaluate_grid(ev, seed, threads, out_dir);
      if (ev.truth_dir.empty() || ev.fit_dir.empty())
        throw ValidationError("evaluate: pass --truth-dir and --fit-dir, or --grid");
      return run_evaluate_files(ev, out_dir);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  }
}
