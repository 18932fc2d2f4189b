#include "mps/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mps/init.hpp"
#include "mps/io.hpp"
#include "mps/model.hpp"

namespace fs = std::filesystem;

namespace mps {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::vector<double> parse_probs(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(trim(tok)));
  return out;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

MpsConfig make_mps_config(const RunConfig& rc) {
  MpsConfig cfg = MpsConfig::defaults(rc.dim, rc.truncation);
  cfg.n_iter = rc.iters;
  cfg.burn_in = rc.effective_burnin();
  cfg.seed = rc.seed;
  if (rc.alpha_is_fixed) cfg.alpha_fixed = rc.alpha_fixed;
  cfg.alpha_a0 = rc.alpha_a0;
  cfg.alpha_b0 = rc.alpha_b0;
  return cfg;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw std::invalid_argument(what + " path is required");
  if (!fs::exists(path)) throw std::invalid_argument(what + " not found: " + path);
}

int run_guarded(const char* name, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << name << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  RunConfig rc;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  " is not key=value: " + line);
    }
    rc.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return rc;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  try {
    if (key == "responses") responses = value;
    else if (key == "constraints") constraints = value;
    else if (key == "covariates") covariates = value;
    else if (key == "truth") truth = value;
    else if (key == "out") out = value;
    else if (key == "init_partition") init_partition = value;
    else if (key == "dim") dim = std::stoi(value);
    else if (key == "truncation") truncation = std::stoi(value);
    else if (key == "iters") iters = std::stoi(value);
    else if (key == "burnin") burnin = std::stoi(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "alpha") { alpha_is_fixed = true; alpha_fixed = std::stod(value); }
    else if (key == "alpha_a0") alpha_a0 = std::stod(value);
    else if (key == "alpha_b0") alpha_b0 = std::stod(value);
    else if (key == "workers") workers = std::stoi(value);
    else if (key == "thin_assign") thin_assign = std::stoi(value);
    else if (key == "init") init_mode = value;
    else if (key == "kmeans_k") kmeans_k = std::stoi(value);
    else if (key == "graph") graph = parse_bool(value);
    else if (key == "gap") gap = parse_bool(value);
    else if (key == "communities") communities = parse_bool(value);
    else if (key == "min_size") min_size = std::stoi(value);
    else if (key == "gap_kmax") gap_kmax = std::stoi(value);
    else if (key == "gap_nnull") gap_nnull = std::stoi(value);
    else if (key == "reference_cluster") reference_cluster = std::stoi(value);
    else if (key == "reg_iters") reg_iters = std::stoi(value);
    else if (key == "reg_burnin") reg_burnin = std::stoi(value);
    else if (key == "sim_units") sim_units = std::stoi(value);
    else if (key == "sim_items") sim_items = std::stoi(value);
    else if (key == "sim_probs") sim_probs = value;
    else if (key == "missing_rate") missing_rate = std::stod(value);
    else throw std::invalid_argument("unknown config key: " + key);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad value for config key " + key + ": " + value);
  }
}

int cmd_simulate(const RunConfig& rc) {
  return run_guarded("simulate", [&] {
    const auto probs = parse_probs(rc.sim_probs);
    const auto [y, truth] = simulate_dataset(rc.sim_units, rc.sim_items, rc.dim,
                                             probs, rc.seed, rc.missing_rate);
    fs::create_directories(rc.out);
    save_responses(y, join_path(rc.out, "responses.csv"));
    save_truth(truth, join_path(rc.out, "truth.json"));
    std::cout << "simulated " << y.n_units << " units x " << y.n_items
              << " items into " << rc.out << "\n";
  });
}

int cmd_fit(const RunConfig& rc) {
  return run_guarded("fit", [&] {
    // Validate the numeric configuration before touching any inputs.
    if (rc.iters < 1) throw std::invalid_argument("iters must be >= 1");
    if (rc.effective_burnin() >= rc.iters || rc.effective_burnin() < 0) {
      throw std::invalid_argument("burnin must satisfy 0 <= burnin < iters");
    }
    if (rc.workers < 1) throw std::invalid_argument("workers must be >= 1");
    require_file(rc.responses, "responses");

    const ResponseMatrix y = load_responses(rc.responses);
    MpsConfig cfg = make_mps_config(rc);
    if (!rc.constraints.empty()) {
      require_file(rc.constraints, "constraints");
      cfg.constraints =
          resolve_constraints(y, load_unit_cluster_csv(rc.constraints), cfg.truncation);
    }
    cfg.validate(y.n_units);

    InitSpec spec;
    spec.kmeans_k = rc.kmeans_k;
    if (rc.init_mode == "fixed-partition") {
      spec.mode = InitSpec::Mode::kFixedPartition;
      require_file(rc.init_partition, "init_partition");
      const auto by_id = load_unit_cluster_csv(rc.init_partition);
      spec.fixed_partition.assign(static_cast<std::size_t>(y.n_units), -1);
      const auto resolved = resolve_constraints(y, by_id, cfg.truncation);
      std::string missing;
      for (int i = 0; i < y.n_units; ++i) {
        if (resolved[static_cast<std::size_t>(i)] < 0) {
          missing += (missing.empty() ? "" : ", ") + y.unit_ids[i];
        }
      }
      if (!missing.empty()) {
        throw std::invalid_argument("init partition misses units: " + missing);
      }
      spec.fixed_partition = resolved;
    } else if (rc.init_mode != "kmeans") {
      throw std::invalid_argument("init must be kmeans or fixed-partition");
    }

    const MpsState start = build_initial_state(y, cfg, spec);
    const ChainTrace trace = run_chain(y, cfg, start, rc.workers, rc.thin_assign);

    fs::create_directories(rc.out);
    save_map_state(trace.map, cfg, y, join_path(rc.out, "map_state.json"));
    save_trace(trace, join_path(rc.out, "trace.csv"));
    save_fit_stats(trace.map, join_path(rc.out, "fit_stats.json"));
    std::cout << "fit: map log-posterior " << format_double(trace.map.state.log_post)
              << " at iteration " << trace.map.iteration << ", "
              << trace.map.state.occupied_count() << " occupied clusters\n";
  });
}

int cmd_analyze(const RunConfig& rc) {
  return run_guarded("analyze", [&] {
    require_file(rc.responses, "responses");
    const std::string map_path = join_path(rc.out, "map_state.json");
    require_file(map_path, "map_state.json (run fit first)");
    const ResponseMatrix y = load_responses(rc.responses);
    const MapEstimate est = load_map_state(map_path);
    if (est.state.n_units != y.n_units || est.state.n_items != y.n_items) {
      throw std::invalid_argument("map state does not match the responses file");
    }

    nlohmann::json summary;
    summary["log_lik"] = est.log_lik;
    summary["bic"] = est.bic;
    summary["aic"] = est.aic;
    summary["occupied"] = est.state.occupied_count();

    ClusterGraph graph;
    std::vector<int> community;
    bool have_graph = false;
    if (rc.graph || rc.gap || rc.communities) {
      graph = discrimination_correlations(est.state, rc.min_size);
      have_graph = true;
      save_graph_edges(graph, join_path(rc.out, "graph_edges.csv"));
      nlohmann::json nodes = nlohmann::json::array();
      for (const int n : graph.nodes) nodes.push_back(n + 1);
      summary["graph_nodes"] = std::move(nodes);
    }
    if (rc.gap) {
      const int n_nodes = static_cast<int>(graph.nodes.size());
      const int kmax = std::max(1, std::min(rc.gap_kmax, n_nodes - 1));
      const GapCurve curve =
          gap_statistic(graph, kmax, rc.gap_nnull, rc.seed, rc.workers);
      save_gap_curve(curve, join_path(rc.out, "gap_curve.csv"));
      summary["k_star"] = curve.k_star;
    }
    if (rc.communities) {
      community = detect_communities(graph);
      const double q = modularity(graph.weights, community);
      save_communities(graph, community, q, join_path(rc.out, "communities.json"));
      summary["modularity"] = q;
      summary["n_communities"] =
          *std::max_element(community.begin(), community.end()) + 1;
    }
    if (!rc.truth.empty()) {
      require_file(rc.truth, "truth");
      const SimTruth truth = load_truth(rc.truth);
      if (truth.n_units != y.n_units) {
        throw std::invalid_argument("truth file does not match the responses file");
      }
      const CrossTab ct = crosstab_clusters(est.state.assign, truth.assign_true);
      save_crosstab(ct, join_path(rc.out, "crosstab.csv"));
      summary["purity"] = ct.purity;
    }
    if (!rc.covariates.empty()) {
      require_file(rc.covariates, "covariates");
      if (!have_graph || community.empty()) {
        throw std::invalid_argument(
            "membership regression needs the community step enabled");
      }
      // Outcome: MAP cluster lies in the community of the reference cluster.
      const int ref = rc.reference_cluster - 1;
      int ref_pos = -1;
      for (std::size_t c = 0; c < graph.nodes.size(); ++c) {
        if (graph.nodes[c] == ref) ref_pos = static_cast<int>(c);
      }
      if (ref_pos < 0) {
        throw std::invalid_argument("reference cluster " +
                                    std::to_string(rc.reference_cluster) +
                                    " is not an occupied graph node");
      }
      const int ref_comm = community[static_cast<std::size_t>(ref_pos)];
      std::vector<int> in_comm(static_cast<std::size_t>(est.state.truncation), 0);
      for (std::size_t c = 0; c < graph.nodes.size(); ++c) {
        if (community[c] == ref_comm) in_comm[static_cast<std::size_t>(graph.nodes[c])] = 1;
      }
      std::vector<int> outcome(static_cast<std::size_t>(y.n_units));
      for (int i = 0; i < y.n_units; ++i) {
        outcome[static_cast<std::size_t>(i)] =
            in_comm[static_cast<std::size_t>(est.state.assign[i])];
      }
      const CovariateMatrix cm = load_covariates(rc.covariates, y.unit_ids, outcome);
      const ProbitSummary fit =
          fit_bayes_probit(cm, rc.reg_iters, rc.reg_burnin, rc.seed, rc.workers);
      save_regression(fit, join_path(rc.out, "regression_coefs.csv"));
      long long members = 0;
      for (const int v : outcome) members += v;
      summary["regression_members"] = members;
    }
    nlohmann::json out_json = std::move(summary);
    std::ofstream os(join_path(rc.out, "analysis.json"), std::ios::binary);
    os << out_json.dump(2) << "\n";
    std::cout << "analyze: wrote post-fit artifacts to " << rc.out << "\n";
  });
}

int cmd_report(const RunConfig& rc) {
  return run_guarded("report", [&] {
    std::ostringstream md;
    md << "# MPS run report\n\n";
    const std::string fit_path = join_path(rc.out, "fit_stats.json");
    require_file(fit_path, "fit_stats.json (run fit first)");
    {
      std::ifstream in(fit_path);
      nlohmann::json j = nlohmann::json::parse(in);
      md << "## Fit\n\n";
      md << "| statistic | value |\n|---|---|\n";
      md << "| log-likelihood | " << j["log_lik"] << " |\n";
      md << "| log-posterior (MAP) | " << j["log_post"] << " |\n";
      md << "| BIC | " << j["bic"] << " |\n";
      md << "| AIC | " << j["aic"] << " |\n";
      md << "| parameters | " << j["n_params"] << " |\n";
      md << "| observed cells | " << j["n_obs"] << " |\n";
      md << "| occupied clusters | " << j["occupied"] << " |\n";
      md << "| MAP iteration | " << j["map_iteration"] << " |\n\n";
      md << "Occupancy by cluster: ";
      bool first = true;
      int k = 0;
      for (const auto& v : j["occupancy"]) {
        if (!first) md << ", ";
        md << (k + 1) << ":" << v;
        first = false;
        ++k;
      }
      md << "\n\n";
    }
    const std::string analysis_path = join_path(rc.out, "analysis.json");
    if (fs::exists(analysis_path)) {
      std::ifstream in(analysis_path);
      nlohmann::json j = nlohmann::json::parse(in);
      md << "## Substantive clusters\n\n";
      if (j.contains("k_star")) md << "- gap statistic k*: " << j["k_star"] << "\n";
      if (j.contains("n_communities")) {
        md << "- communities: " << j["n_communities"]
           << " (modularity " << j["modularity"] << ")\n";
      }
      if (j.contains("purity")) md << "- crosstab purity: " << j["purity"] << "\n";
      if (j.contains("regression_members")) {
        md << "- units in reference community: " << j["regression_members"] << "\n";
      }
      md << "\n";
    }
    const std::string gap_path = join_path(rc.out, "gap_curve.csv");
    if (fs::exists(gap_path)) {
      md << "## Gap curve\n\n| k | gap | se |\n|---|---|---|\n";
      const auto rows = load_csv_table(gap_path);
      for (std::size_t r = 1; r < rows.size(); ++r) {
        md << "| " << rows[r][0] << (rows[r][5] == "1" ? "*" : "") << " | "
           << rows[r][1] << " | " << rows[r][2] << " |\n";
      }
      md << "\n";
    }
    const std::string reg_path = join_path(rc.out, "regression_coefs.csv");
    if (fs::exists(reg_path)) {
      md << "## Membership regression (90% credible intervals)\n\n";
      md << "| term | mean | sd | q05 | q95 |\n|---|---|---|---|---|\n";
      const auto rows = load_csv_table(reg_path);
      for (std::size_t r = 1; r < rows.size(); ++r) {
        md << "| " << rows[r][0] << " | " << rows[r][1] << " | " << rows[r][2]
           << " | " << rows[r][3] << " | " << rows[r][4] << " |\n";
      }
      md << "\n";
    }
    std::ofstream os(join_path(rc.out, "report.md"), std::ios::binary);
    os << md.str();
    std::cout << "report: wrote " << join_path(rc.out, "report.md") << "\n";
  });
}

}  // namespace mps
