#include "mps/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mps {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (const char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

json state_to_json(const MpsState& s) {
  json m;
  m["iteration"] = 0;  // overwritten by caller when known
  m["alpha"] = s.alpha;
  m["log_post"] = s.log_post;
  m["pi"] = s.pi;
  json assign = json::array();
  for (const int k : s.assign) assign.push_back(k + 1);
  m["assign"] = assign;
  json theta = json::array();
  for (int i = 0; i < s.n_units; ++i) {
    json row = json::array();
    for (int d = 0; d < s.dim; ++d) row.push_back(s.theta_at(i, d));
    theta.push_back(std::move(row));
  }
  m["theta"] = std::move(theta);
  json beta = json::array();
  json gamma = json::array();
  for (int k = 0; k < s.truncation; ++k) {
    json bk = json::array();
    json gk = json::array();
    for (int j = 0; j < s.n_items; ++j) {
      json cell = json::array();
      for (int d = 0; d < s.dim; ++d) cell.push_back(s.beta_at(k, j, d));
      bk.push_back(std::move(cell));
      gk.push_back(s.gamma_at(k, j));
    }
    beta.push_back(std::move(bk));
    gamma.push_back(std::move(gk));
  }
  m["beta"] = std::move(beta);
  m["gamma"] = std::move(gamma);
  return m;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::vector<std::string>> load_csv_table(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

ResponseMatrix load_responses(const std::string& path) {
  const auto rows = load_csv_table(path);
  if (rows.size() < 2) {
    throw std::invalid_argument("responses file needs a header and data rows: " + path);
  }
  const auto& header = rows.front();
  if (header.size() < 2) {
    throw std::invalid_argument("responses header needs at least one item column");
  }
  ResponseMatrix y;
  y.n_items = static_cast<int>(header.size()) - 1;
  y.item_ids.assign(header.begin() + 1, header.end());
  y.n_units = static_cast<int>(rows.size()) - 1;
  y.cells.resize(static_cast<std::size_t>(y.n_units) * y.n_items);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& fields = rows[r];
    if (fields.size() != header.size()) {
      throw std::invalid_argument("row " + std::to_string(r + 1) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(header.size()));
    }
    y.unit_ids.push_back(fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const std::string& v = fields[c];
      std::int8_t cell;
      if (v == "0") {
        cell = 0;
      } else if (v == "1") {
        cell = 1;
      } else if (v.empty() || v == "NA") {
        cell = ResponseMatrix::kMissing;
      } else {
        throw std::invalid_argument("bad cell '" + v + "' at row " +
                                    std::to_string(r + 1) + ", column " +
                                    std::to_string(c + 1));
      }
      y.cells[(r - 1) * static_cast<std::size_t>(y.n_items) + (c - 1)] = cell;
    }
  }
  y.validate();
  return y;
}

void save_responses(const ResponseMatrix& y, const std::string& path) {
  std::string out = "unit_id";
  for (const auto& id : y.item_ids) out += "," + id;
  out += "\n";
  for (int i = 0; i < y.n_units; ++i) {
    out += y.unit_ids[static_cast<std::size_t>(i)];
    for (int j = 0; j < y.n_items; ++j) {
      const auto c = y.cell(i, j);
      out += c == ResponseMatrix::kMissing ? ",NA" : (c == 1 ? ",1" : ",0");
    }
    out += "\n";
  }
  write_file(path, out);
}

std::map<std::string, int> load_unit_cluster_csv(const std::string& path) {
  const auto rows = load_csv_table(path);
  std::map<std::string, int> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f.size() != 2) {
      throw std::invalid_argument("expected (unit_id, cluster) at row " +
                                  std::to_string(r + 1) + " of " + path);
    }
    int k = 0;
    const auto res = std::from_chars(f[1].data(), f[1].data() + f[1].size(), k);
    if (res.ec != std::errc{} || res.ptr != f[1].data() + f[1].size()) {
      if (r == 0) continue;  // header line
      throw std::invalid_argument("bad cluster index '" + f[1] + "' at row " +
                                  std::to_string(r + 1) + " of " + path);
    }
    if (!out.emplace(f[0], k).second) {
      throw std::invalid_argument("duplicate unit '" + f[0] + "' in " + path);
    }
  }
  return out;
}

std::vector<int> resolve_constraints(const ResponseMatrix& y,
                                     const std::map<std::string, int>& by_id,
                                     int truncation) {
  std::vector<int> out(static_cast<std::size_t>(y.n_units), -1);
  std::map<std::string, int> index;
  for (int i = 0; i < y.n_units; ++i) index[y.unit_ids[static_cast<std::size_t>(i)]] = i;
  for (const auto& [id, k] : by_id) {
    const auto it = index.find(id);
    if (it == index.end()) {
      throw std::invalid_argument("constraint names unknown unit: " + id);
    }
    if (k < 1 || k > truncation) {
      throw std::invalid_argument("constraint cluster for unit " + id +
                                  " outside 1.." + std::to_string(truncation));
    }
    out[static_cast<std::size_t>(it->second)] = k - 1;
  }
  return out;
}

void save_truth(const SimTruth& truth, const std::string& path) {
  json j;
  j["n_units"] = truth.n_units;
  j["n_items"] = truth.n_items;
  j["dim"] = truth.dim;
  j["n_clusters"] = truth.n_clusters;
  j["seed"] = truth.seed;
  j["cluster_probs"] = truth.cluster_probs;
  json assign = json::array();
  for (const int k : truth.assign_true) assign.push_back(k + 1);
  j["assign_true"] = std::move(assign);
  j["theta_true"] = truth.theta_true;
  j["beta_true"] = truth.beta_true;
  j["gamma_true"] = truth.gamma_true;
  write_file(path, j.dump(2) + "\n");
}

SimTruth load_truth(const std::string& path) {
  const json j = json::parse(read_file(path));
  SimTruth t;
  t.n_units = j.at("n_units").get<int>();
  t.n_items = j.at("n_items").get<int>();
  t.dim = j.at("dim").get<int>();
  t.n_clusters = j.at("n_clusters").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.cluster_probs = j.at("cluster_probs").get<std::vector<double>>();
  for (const auto& v : j.at("assign_true")) t.assign_true.push_back(v.get<int>() - 1);
  t.theta_true = j.at("theta_true").get<std::vector<double>>();
  t.beta_true = j.at("beta_true").get<std::vector<double>>();
  t.gamma_true = j.at("gamma_true").get<std::vector<double>>();
  return t;
}

void save_map_state(const MapEstimate& est, const MpsConfig& cfg,
                    const ResponseMatrix& y, const std::string& path) {
  json j;
  j["model"]["dim"] = cfg.dim;
  j["model"]["truncation"] = cfg.truncation;
  if (cfg.alpha_fixed) {
    j["model"]["alpha_fixed"] = *cfg.alpha_fixed;
  } else {
    j["model"]["alpha_a0"] = cfg.alpha_a0;
    j["model"]["alpha_b0"] = cfg.alpha_b0;
  }
  j["model"]["seed"] = cfg.seed;
  j["data"]["n_units"] = y.n_units;
  j["data"]["n_items"] = y.n_items;
  j["data"]["unit_ids"] = y.unit_ids;
  j["data"]["item_ids"] = y.item_ids;
  json m = state_to_json(est.state);
  m["iteration"] = est.iteration;
  j["map"] = std::move(m);
  j["fit"]["log_lik"] = est.log_lik;
  j["fit"]["bic"] = est.bic;
  j["fit"]["aic"] = est.aic;
  j["fit"]["n_params"] = est.n_params;
  j["fit"]["n_obs"] = est.n_obs;
  j["fit"]["occupancy"] = est.occupancy;
  write_file(path, j.dump(2) + "\n");
}

MapEstimate load_map_state(const std::string& path) {
  const json j = json::parse(read_file(path));
  MapEstimate est;
  MpsState& s = est.state;
  s.dim = j.at("model").at("dim").get<int>();
  s.truncation = j.at("model").at("truncation").get<int>();
  s.n_units = j.at("data").at("n_units").get<int>();
  s.n_items = j.at("data").at("n_items").get<int>();
  const json& m = j.at("map");
  s.alpha = m.at("alpha").get<double>();
  s.log_post = m.at("log_post").get<double>();
  s.pi = m.at("pi").get<std::vector<double>>();
  for (const auto& v : m.at("assign")) s.assign.push_back(v.get<int>() - 1);
  s.theta.reserve(static_cast<std::size_t>(s.n_units) * s.dim);
  for (const auto& row : m.at("theta")) {
    for (const auto& v : row) s.theta.push_back(v.get<double>());
  }
  for (const auto& bk : m.at("beta")) {
    for (const auto& cell : bk) {
      for (const auto& v : cell) s.beta.push_back(v.get<double>());
    }
  }
  for (const auto& gk : m.at("gamma")) {
    for (const auto& v : gk) s.gamma.push_back(v.get<double>());
  }
  s.ystar.assign(static_cast<std::size_t>(s.n_units) * s.n_items, 0.0);
  est.iteration = m.at("iteration").get<int>();
  est.log_lik = j.at("fit").at("log_lik").get<double>();
  est.bic = j.at("fit").at("bic").get<double>();
  est.aic = j.at("fit").at("aic").get<double>();
  est.n_params = j.at("fit").at("n_params").get<long long>();
  est.n_obs = j.at("fit").at("n_obs").get<long long>();
  est.occupancy = j.at("fit").at("occupancy").get<std::vector<int>>();
  return est;
}

void save_trace(const ChainTrace& trace, const std::string& path) {
  std::string out = "iter,log_post,log_lik,alpha,occupied\n";
  for (const auto& rec : trace.scalar_trace) {
    out += std::to_string(rec.iter) + "," + format_double(rec.log_post) + "," +
           format_double(rec.log_lik) + "," + format_double(rec.alpha) + "," +
           std::to_string(rec.occupied) + "\n";
  }
  write_file(path, out);
}

void save_fit_stats(const MapEstimate& est, const std::string& path) {
  json j;
  j["log_lik"] = est.log_lik;
  j["log_post"] = est.state.log_post;
  j["bic"] = est.bic;
  j["aic"] = est.aic;
  j["n_params"] = est.n_params;
  j["n_obs"] = est.n_obs;
  j["occupancy"] = est.occupancy;
  j["occupied"] = est.state.occupied_count();
  j["map_iteration"] = est.iteration;
  j["alpha"] = est.state.alpha;
  write_file(path, j.dump(2) + "\n");
}

CovariateMatrix load_covariates(const std::string& path,
                                const std::vector<std::string>& unit_ids,
                                const std::vector<int>& outcome) {
  const auto rows = load_csv_table(path);
  if (rows.size() < 2) {
    throw std::invalid_argument("covariates file needs a header and data rows");
  }
  const auto& header = rows.front();
  if (header.size() < 2) {
    throw std::invalid_argument("covariates file needs at least one column");
  }
  const int p = static_cast<int>(header.size()) - 1;
  std::map<std::string, std::vector<double>> by_id;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f.size() != header.size()) {
      throw std::invalid_argument("covariates row " + std::to_string(r + 1) +
                                  " has wrong field count");
    }
    std::vector<double> vals(static_cast<std::size_t>(p));
    for (int c = 0; c < p; ++c) {
      const std::string& v = f[static_cast<std::size_t>(c + 1)];
      try {
        std::size_t used = 0;
        vals[static_cast<std::size_t>(c)] = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (...) {
        throw std::invalid_argument("bad covariate value '" + v + "' at row " +
                                    std::to_string(r + 1) + ", column " +
                                    std::to_string(c + 2));
      }
    }
    if (!by_id.emplace(f[0], std::move(vals)).second) {
      throw std::invalid_argument("duplicate unit '" + f[0] + "' in covariates");
    }
  }

  CovariateMatrix cm;
  cm.col_names.push_back("(Intercept)");
  for (int c = 0; c < p; ++c) cm.col_names.push_back(header[static_cast<std::size_t>(c + 1)]);
  cm.x.resize(static_cast<Eigen::Index>(unit_ids.size()), p + 1);
  cm.outcome.resize(static_cast<Eigen::Index>(unit_ids.size()));
  std::string missing;
  for (std::size_t i = 0; i < unit_ids.size(); ++i) {
    const auto it = by_id.find(unit_ids[i]);
    if (it == by_id.end()) {
      missing += (missing.empty() ? "" : ", ") + unit_ids[i];
      continue;
    }
    cm.x(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (int c = 0; c < p; ++c) {
      cm.x(static_cast<Eigen::Index>(i), c + 1) = it->second[static_cast<std::size_t>(c)];
    }
    cm.outcome(static_cast<Eigen::Index>(i)) = outcome[i];
  }
  if (!missing.empty()) {
    throw std::invalid_argument("covariates missing for units: " + missing);
  }
  cm.validate();
  return cm;
}

void save_graph_edges(const ClusterGraph& g, const std::string& path) {
  std::string out = "cluster_a,cluster_b,corr,weight,fisher_se\n";
  const int n = static_cast<int>(g.nodes.size());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      out += std::to_string(g.nodes[static_cast<std::size_t>(a)] + 1) + "," +
             std::to_string(g.nodes[static_cast<std::size_t>(b)] + 1) + "," +
             format_double(g.raw_corr(a, b)) + "," + format_double(g.weights(a, b)) +
             "," + format_double(g.fisher_se(a, b)) + "\n";
    }
  }
  write_file(path, out);
}

void save_gap_curve(const GapCurve& c, const std::string& path) {
  std::string out = "k,gap,se,log_dbar,null_mean,is_kstar\n";
  for (std::size_t i = 0; i < c.k_values.size(); ++i) {
    out += std::to_string(c.k_values[i]) + "," + format_double(c.gap[i]) + "," +
           format_double(c.se[i]) + "," + format_double(c.log_dbar[i]) + "," +
           format_double(c.null_mean[i]) + "," +
           (c.k_values[i] == c.k_star ? "1" : "0") + "\n";
  }
  write_file(path, out);
}

void save_communities(const ClusterGraph& g, const std::vector<int>& community,
                      double q, const std::string& path) {
  json j;
  json nodes = json::array();
  for (const int n : g.nodes) nodes.push_back(n + 1);
  j["nodes"] = std::move(nodes);
  j["community"] = community;
  j["modularity"] = q;
  int n_comm = 0;
  for (const int c : community) n_comm = std::max(n_comm, c + 1);
  json groups = json::array();
  for (int c = 0; c < n_comm; ++c) {
    json members = json::array();
    for (std::size_t i = 0; i < community.size(); ++i) {
      if (community[i] == c) members.push_back(g.nodes[i] + 1);
    }
    groups.push_back(std::move(members));
  }
  j["communities"] = std::move(groups);
  write_file(path, j.dump(2) + "\n");
}

void save_crosstab(const CrossTab& ct, const std::string& path) {
  std::string out = "est_cluster";
  for (const int t : ct.true_labels) out += ",true_" + std::to_string(t + 1);
  out += "\n";
  for (std::size_t r = 0; r < ct.est_labels.size(); ++r) {
    out += std::to_string(ct.est_labels[r] + 1);
    for (const long long v : ct.table[r]) out += "," + std::to_string(v);
    out += "\n";
  }
  write_file(path, out);
}

void save_regression(const ProbitSummary& s, const std::string& path) {
  std::string out = "term,mean,sd,q05,q95\n";
  for (std::size_t c = 0; c < s.names.size(); ++c) {
    const auto i = static_cast<Eigen::Index>(c);
    out += s.names[c] + "," + format_double(s.mean(i)) + "," + format_double(s.sd(i)) +
           "," + format_double(s.lo90(i)) + "," + format_double(s.hi90(i)) + "\n";
  }
  write_file(path, out);
}

}  // namespace mps
