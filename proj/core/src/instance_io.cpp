#include "rsreg/instance_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace rsreg {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_real(const std::string& tok, const fs::path& file) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) {
    throw InvalidParameter("cannot parse real '" + tok + "' in " + file.string());
  }
  return v;
}

std::vector<double> to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_json_vec(const json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

Matrix read_csv_matrix(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw InvalidParameter("cannot open " + file.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) row.push_back(parse_real(tok, file));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidParameter("ragged row in " + file.string());
    }
    rows.push_back(std::move(row));
  }
  const Index r = static_cast<Index>(rows.size());
  const Index c = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rows[i][j];
  return m;
}

void write_csv_matrix(const Matrix& m, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw InvalidParameter("cannot write " + file.string());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << fmt_real(m(i, j));
    }
    out << '\n';
  }
}

void write_instance(const RegressionInstance& inst, const fs::path& dir) {
  fs::create_directories(dir);
  write_csv_matrix(inst.design, dir / "design.csv");
  write_csv_matrix(inst.response, dir / "response.csv");

  json meta;
  meta["sigma"] = inst.sigma;
  meta["epsilon"] = inst.epsilon;
  meta["alpha"] = inst.alpha;
  meta["n"] = inst.n();
  meta["d"] = inst.d();
  if (inst.truth) {
    const GroundTruth& g = *inst.truth;
    json t;
    t["beta_star"] = to_vec(g.beta_star);
    std::vector<std::vector<double>> cov(static_cast<size_t>(g.covariance.rows()));
    for (Index i = 0; i < g.covariance.rows(); ++i) cov[i] = to_vec(g.covariance.row(i).transpose());
    t["covariance"] = cov;
    std::vector<int> mask;
    mask.reserve(g.good_mask.size());
    for (bool b : g.good_mask) mask.push_back(b ? 1 : 0);
    t["good_mask"] = mask;
    t["eta"] = to_vec(g.eta);
    t["zeta_support"] = g.zeta_support;
    t["k"] = g.k;
    t["seed"] = g.seed;
    meta["truth"] = t;
  }
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
}

RegressionInstance read_instance(const fs::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw InvalidParameter("missing meta.json in " + dir.string());
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("malformed meta.json: ") + e.what());
  }

  RegressionInstance inst;
  inst.design = read_csv_matrix(dir / "design.csv");
  Matrix resp = read_csv_matrix(dir / "response.csv");
  if (resp.cols() > 1) throw InvalidParameter("response.csv must have one value per line");
  inst.response = resp.rows() ? Vector(resp.col(0)) : Vector();

  try {
    inst.sigma = meta.at("sigma").get<double>();
    inst.epsilon = meta.at("epsilon").get<double>();
    inst.alpha = meta.value("alpha", 1.0);
    if (meta.contains("n") && meta["n"].get<Index>() != inst.design.rows()) {
      throw InvalidParameter("meta.json n disagrees with design.csv");
    }
    if (meta.contains("d") && inst.design.rows() > 0 && meta["d"].get<Index>() != inst.design.cols()) {
      throw InvalidParameter("meta.json d disagrees with design.csv");
    }
    if (meta.contains("truth")) {
      const json& t = meta["truth"];
      GroundTruth g;
      g.beta_star = from_json_vec(t.at("beta_star"));
      const auto cov = t.at("covariance").get<std::vector<std::vector<double>>>();
      g.covariance.resize(static_cast<Index>(cov.size()), static_cast<Index>(cov.size()));
      for (size_t i = 0; i < cov.size(); ++i) {
        if (cov[i].size() != cov.size()) throw InvalidParameter("covariance must be square");
        for (size_t j = 0; j < cov.size(); ++j) g.covariance(i, j) = cov[i][j];
      }
      for (int b : t.at("good_mask").get<std::vector<int>>()) g.good_mask.push_back(b != 0);
      g.eta = from_json_vec(t.at("eta"));
      g.zeta_support = t.value("zeta_support", std::vector<Index>{});
      g.k = t.value("k", 1);
      g.seed = t.value("seed", std::uint64_t{0});
      inst.truth = std::move(g);
    }
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("malformed meta.json: ") + e.what());
  }
  return inst;
}

namespace {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <class T>
void take_opt(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

const std::vector<std::string> kConfigKeys = {
    "k", "epsilon", "sigma", "t", "ell", "m2t", "c_lambda", "c_tau", "c_threshold", "skip_truncation",
    "apply_filter", "backend", "delta", "kappa_hat", "epsilon_tilde_factor", "huber_threshold", "tol_kkt",
    "max_huber_iters", "mom_blocks", "mom_median_over_coordinates", "eps_alpha_ratio", "elastic_k", "sigma_min",
    "tau", "lambda", "sigma_max_hat"};

}  // namespace

EstimatorConfig config_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw InvalidParameter("config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
        throw InvalidParameter("unknown config key '" + key + "'");
      }
    }
    EstimatorConfig cfg = EstimatorConfig::defaults_for(j.value("t", 1));
    take(j, "k", cfg.k);
    take(j, "epsilon", cfg.epsilon);
    take_opt(j, "sigma", cfg.sigma);
    take(j, "ell", cfg.ell);
    take(j, "m2t", cfg.m2t);
    take(j, "c_lambda", cfg.c_lambda);
    take(j, "c_tau", cfg.c_tau);
    take(j, "c_threshold", cfg.c_threshold);
    take(j, "skip_truncation", cfg.skip_truncation);
    take(j, "apply_filter", cfg.apply_filter);
    take(j, "delta", cfg.delta);
    take(j, "kappa_hat", cfg.kappa_hat);
    take(j, "epsilon_tilde_factor", cfg.epsilon_tilde_factor);
    take(j, "huber_threshold", cfg.huber_threshold);
    take(j, "tol_kkt", cfg.tol_kkt);
    take(j, "max_huber_iters", cfg.max_huber_iters);
    take(j, "mom_blocks", cfg.mom_blocks);
    take(j, "mom_median_over_coordinates", cfg.mom_median_over_coordinates);
    take(j, "eps_alpha_ratio", cfg.eps_alpha_ratio);
    take_opt(j, "elastic_k", cfg.elastic_k);
    take_opt(j, "sigma_min", cfg.sigma_min);
    take_opt(j, "tau", cfg.tau);
    take_opt(j, "lambda", cfg.lambda);
    take_opt(j, "sigma_max_hat", cfg.sigma_max_hat);
    if (j.contains("backend")) {
      const json& b = j.at("backend");
      if (b.is_string()) {
        cfg.backend.kind = backend_from_string(b.get<std::string>());
      } else {
        if (b.contains("kind")) cfg.backend.kind = backend_from_string(b.at("kind").get<std::string>());
        take(b, "tol_feas", cfg.backend.tol_feas);
        take(b, "tol_gap", cfg.backend.tol_gap);
        take(b, "max_solver_iters", cfg.backend.max_solver_iters);
        take(b, "seed", cfg.backend.seed);
        take(b, "full_sos_max_d", cfg.backend.full_sos_max_d);
        take(b, "full_sos_max_basis", cfg.backend.full_sos_max_basis);
        take(b, "lite_max_d", cfg.backend.lite_max_d);
      }
    }
    validate_config(cfg);
    return cfg;
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("malformed config: ") + e.what());
  }
}

EstimatorConfig read_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw InvalidParameter("cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const EstimatorConfig& cfg) {
  json j;
  j["k"] = cfg.k;
  j["epsilon"] = cfg.epsilon;
  if (cfg.sigma) j["sigma"] = *cfg.sigma;
  j["t"] = cfg.t;
  j["ell"] = cfg.ell;
  j["m2t"] = cfg.m2t;
  j["c_lambda"] = cfg.c_lambda;
  j["c_tau"] = cfg.c_tau;
  j["c_threshold"] = cfg.c_threshold;
  j["skip_truncation"] = cfg.skip_truncation;
  j["apply_filter"] = cfg.apply_filter;
  j["delta"] = cfg.delta;
  j["kappa_hat"] = cfg.kappa_hat;
  j["epsilon_tilde_factor"] = cfg.epsilon_tilde_factor;
  j["huber_threshold"] = cfg.huber_threshold;
  j["tol_kkt"] = cfg.tol_kkt;
  j["max_huber_iters"] = cfg.max_huber_iters;
  j["mom_blocks"] = cfg.mom_blocks;
  j["mom_median_over_coordinates"] = cfg.mom_median_over_coordinates;
  j["eps_alpha_ratio"] = cfg.eps_alpha_ratio;
  if (cfg.elastic_k) j["elastic_k"] = *cfg.elastic_k;
  if (cfg.sigma_min) j["sigma_min"] = *cfg.sigma_min;
  if (cfg.tau) j["tau"] = *cfg.tau;
  if (cfg.lambda) j["lambda"] = *cfg.lambda;
  if (cfg.sigma_max_hat) j["sigma_max_hat"] = *cfg.sigma_max_hat;
  j["backend"] = {{"kind", to_string(cfg.backend.kind)},
                  {"tol_feas", cfg.backend.tol_feas},
                  {"tol_gap", cfg.backend.tol_gap},
                  {"max_solver_iters", cfg.backend.max_solver_iters},
                  {"seed", cfg.backend.seed},
                  {"full_sos_max_d", cfg.backend.full_sos_max_d},
                  {"full_sos_max_basis", cfg.backend.full_sos_max_basis},
                  {"lite_max_d", cfg.backend.lite_max_d}};
  return j.dump(2);
}

}  // namespace rsreg
