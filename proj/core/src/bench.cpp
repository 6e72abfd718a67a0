#include "rsreg/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "rng.hpp"
#include "rsreg/instance_io.hpp"
#include "rsreg/pipeline.hpp"

namespace rsreg {

using nlohmann::json;

Metrics compute_metrics(const Vector& beta_hat, const GroundTruth& truth) {
  const Index d = truth.beta_star.size();
  if (beta_hat.size() != d) throw InvalidParameter("compute_metrics: beta_hat has the wrong length");
  Metrics m;
  const Vector diff = beta_hat - truth.beta_star;
  m.l2_error = diff.norm();
  m.l1_error = diff.lpNorm<1>();
  if (truth.covariance.rows() == d && truth.covariance.cols() == d) {
    m.sigma_error = std::sqrt(std::max(0.0, diff.dot(truth.covariance * diff)));
  } else {
    m.sigma_error = m.l2_error;
  }
  Index est = 0, tru = 0, hit = 0;
  for (Index j = 0; j < d; ++j) {
    const bool e = std::abs(beta_hat[j]) > 1e-8;
    const bool s = truth.beta_star[j] != 0.0;
    est += e;
    tru += s;
    hit += e && s;
  }
  m.support_precision = est > 0 ? static_cast<double>(hit) / static_cast<double>(est) : (tru == 0 ? 1.0 : 0.0);
  m.support_recall = tru > 0 ? static_cast<double>(hit) / static_cast<double>(tru) : 1.0;
  return m;
}

Metrics compute_metrics(const Vector& beta_hat, const RegressionInstance& inst) {
  if (!inst.truth) throw InvalidParameter("compute_metrics: instance has no ground truth");
  return compute_metrics(beta_hat, *inst.truth);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_filter: return "no_filter";
    case Variant::no_truncate: return "no_truncate";
    case Variant::plain_lasso: return "plain_lasso";
  }
  return "full";
}

Variant variant_from_string(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "no_filter") return Variant::no_filter;
  if (name == "no_truncate") return Variant::no_truncate;
  if (name == "plain_lasso") return Variant::plain_lasso;
  throw InvalidParameter("unknown variant '" + name + "'");
}

EstimatorConfig apply_variant(EstimatorConfig cfg, Variant v) {
  switch (v) {
    case Variant::full: break;
    case Variant::no_filter: cfg.apply_filter = false; break;
    case Variant::no_truncate: cfg.skip_truncation = true; break;
    case Variant::plain_lasso:
      cfg.apply_filter = false;
      cfg.skip_truncation = true;
      cfg.huber_threshold = std::numeric_limits<double>::infinity();
      break;
  }
  return cfg;
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& what) {
  if (!j.is_object()) throw InvalidParameter(what + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) == keys.end()) {
      throw InvalidParameter("unknown " + what + " key '" + key + "'");
    }
  }
}

datagen::CovarianceSpec covariance_from_json(const json& j) {
  reject_unknown(j, {"kind", "rho", "values", "matrix"}, "covariance");
  const std::string kind = j.value("kind", "identity");
  if (kind == "identity") return datagen::IdentityCov{};
  if (kind == "toeplitz") return datagen::ToeplitzCov{j.value("rho", 0.5)};
  if (kind == "diagonal") {
    const auto v = j.at("values").get<std::vector<double>>();
    return datagen::DiagonalCov{Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()))};
  }
  if (kind == "explicit") {
    const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
    for (size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<Index>(rows[i].size()) != m.cols()) throw InvalidParameter("covariance matrix is ragged");
      for (size_t c = 0; c < rows[i].size(); ++c) m(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
    }
    return datagen::ExplicitCov{m};
  }
  throw InvalidParameter("unknown covariance kind '" + kind + "'");
}

datagen::DesignFamily family_named(const std::string& name, double dof) {
  if (name == "gaussian") return datagen::Gaussian{};
  if (name == "student_t") return datagen::StudentT{dof};
  if (name == "laplace") return datagen::LaplaceProduct{};
  if (name == "uniform") return datagen::UniformBox{};
  throw InvalidParameter("unknown design family '" + name + "'");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, r.ptr);
}

std::string clean_message(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

struct Cell {
  Index n = 0, d = 0;
  int k = 1;
  double epsilon = 0.0;
  std::string design, noise, adversary;
  int t = 1;
  std::string backend;

  std::string key() const {
    std::ostringstream os;
    os << n << '|' << d << '|' << k << '|' << fmt(epsilon) << '|' << design << '|' << noise << '|' << adversary
       << '|' << t << '|' << backend;
    return os.str();
  }
};

std::vector<Cell> expand(const SweepSpec& s) {
  std::vector<Cell> cells;
  const std::vector<std::string> backends = s.backend.empty() ? std::vector<std::string>{""} : s.backend;
  const std::vector<Index> ns = s.n_rule_c ? std::vector<Index>{0} : s.n;
  for (Index n : ns)
    for (Index d : s.d)
      for (int k : s.k)
        for (double eps : s.epsilon)
          for (const auto& des : s.design)
            for (const auto& noi : s.noise)
              for (const auto& adv : s.adversary)
                for (int t : s.t)
                  for (const auto& be : backends) {
                    Cell c{n, d, k, eps, des, noi, adv, t, be};
                    if (s.n_rule_c) {
                      const double eff = eps > 0 ? eps : 1.0;
                      c.n = static_cast<Index>(std::ceil(*s.n_rule_c * k * k * std::log(static_cast<double>(d)) / eff));
                    }
                    cells.push_back(c);
                  }
  return cells;
}

datagen::InstanceSpec cell_instance(const SweepSpec& s, const Cell& c, std::uint64_t seed) {
  datagen::InstanceSpec is;
  is.n = c.n;
  is.k = c.k;
  is.beta_norm = s.beta_norm;
  is.design.d = c.d;
  is.design.family = family_named(c.design, s.student_dof);
  is.design.covariance = s.covariance;
  if (c.noise == "gaussian") {
    is.noise = datagen::GaussianNoise{s.noise_sigma};
  } else if (c.noise == "cauchy") {
    is.noise = datagen::CauchyNoise{s.cauchy_scale};
  } else if (c.noise == "sparse_inlier") {
    is.noise = datagen::SparseInlierNoise{s.inlier_alpha, s.noise_sigma, s.spike_magnitude};
  } else {
    throw InvalidParameter("unknown noise family '" + c.noise + "'");
  }
  is.adversary.epsilon = c.epsilon;
  if (c.adversary == "none") {
    is.adversary.strategy = datagen::NoAttack{};
    is.adversary.epsilon = 0.0;
  } else if (c.adversary == "random_junk") {
    is.adversary.strategy = datagen::RandomJunk{s.junk_magnitude};
  } else if (c.adversary == "leverage") {
    datagen::LeverageAttack la;
    la.magnitude_scale = s.leverage_scale;
    la.y_target_shift = s.leverage_shift;
    is.adversary.strategy = la;
  } else if (c.adversary == "label_flip") {
    is.adversary.strategy = datagen::LabelFlip{};
  } else {
    throw InvalidParameter("unknown adversary '" + c.adversary + "'");
  }
  is.nominal_epsilon = c.epsilon > 0 ? c.epsilon : 0.01;
  is.seed = seed;
  return is;
}

EstimatorConfig cell_config(const SweepSpec& s, const Cell& c) {
  json j = json::parse(s.estimator_json);
  j["t"] = c.t;
  j["k"] = c.k;
  if (c.epsilon > 0) j["epsilon"] = c.epsilon;
  EstimatorConfig cfg = config_from_json(j.dump());
  if (!c.backend.empty()) cfg.backend.kind = backend_from_string(c.backend);
  return cfg;
}

const char* kHeader =
    "schema_version,cell,trial,variant,n,d,k,epsilon,design,noise,adversary,t,backend,seed,status,"
    "sigma_error,l2_error,l1_error,support_precision,support_recall,lambda,tau,sigma_max_hat,b2t_certified,"
    "filter_iterations,final_weight_sum,cap_hit,huber_converged,wall_time_s,message\n";

}  // namespace

datagen::InstanceSpec instance_spec_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    reject_unknown(j, {"n", "k", "beta_norm", "design", "noise", "adversary", "nominal_epsilon", "seed"}, "instance spec");
    datagen::InstanceSpec is;
    is.n = j.value("n", is.n);
    is.k = j.value("k", is.k);
    is.beta_norm = j.value("beta_norm", is.beta_norm);
    is.nominal_epsilon = j.value("nominal_epsilon", is.nominal_epsilon);
    is.seed = j.value("seed", is.seed);
    if (j.contains("design")) {
      const json& dj = j.at("design");
      reject_unknown(dj, {"family", "dof", "d", "covariance"}, "design");
      is.design.d = dj.value("d", is.design.d);
      is.design.family = family_named(dj.value("family", "gaussian"), dj.value("dof", 5.0));
      if (dj.contains("covariance")) is.design.covariance = covariance_from_json(dj.at("covariance"));
    }
    if (j.contains("noise")) {
      const json& nj = j.at("noise");
      reject_unknown(nj, {"kind", "sigma", "scale", "alpha", "spike_magnitude"}, "noise");
      const std::string kind = nj.value("kind", "gaussian");
      if (kind == "gaussian") {
        is.noise = datagen::GaussianNoise{nj.value("sigma", 1.0)};
      } else if (kind == "cauchy") {
        is.noise = datagen::CauchyNoise{nj.value("scale", 1.0)};
      } else if (kind == "sparse_inlier") {
        is.noise = datagen::SparseInlierNoise{nj.value("alpha", 0.05), nj.value("sigma", 1.0),
                                              nj.value("spike_magnitude", 100.0)};
      } else {
        throw InvalidParameter("unknown noise kind '" + kind + "'");
      }
    }
    if (j.contains("adversary")) {
      const json& aj = j.at("adversary");
      reject_unknown(aj, {"kind", "epsilon", "magnitude", "magnitude_scale", "y_target_shift", "direction"}, "adversary");
      is.adversary.epsilon = aj.value("epsilon", 0.0);
      const std::string kind = aj.value("kind", "none");
      if (kind == "none") {
        is.adversary.strategy = datagen::NoAttack{};
      } else if (kind == "random_junk") {
        is.adversary.strategy = datagen::RandomJunk{aj.value("magnitude", 10.0)};
      } else if (kind == "leverage") {
        datagen::LeverageAttack la;
        la.magnitude_scale = aj.value("magnitude_scale", la.magnitude_scale);
        la.y_target_shift = aj.value("y_target_shift", la.y_target_shift);
        const std::string dir = aj.value("direction", "random_sparse");
        if (dir == "random_sparse") {
          la.direction_mode = datagen::LeverageDirection::random_sparse;
        } else if (dir == "off_support_coordinate") {
          la.direction_mode = datagen::LeverageDirection::off_support_coordinate;
        } else {
          throw InvalidParameter("unknown leverage direction '" + dir + "'");
        }
        is.adversary.strategy = la;
      } else if (kind == "label_flip") {
        is.adversary.strategy = datagen::LabelFlip{};
      } else {
        throw InvalidParameter("unknown adversary kind '" + kind + "'");
      }
    }
    return is;
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("instance spec: ") + e.what());
  }
}

void validate_sweep(const SweepSpec& s) {
  if (!s.n_rule_c && s.n.empty()) throw InvalidParameter("sweep: n grid is empty and no n rule is given");
  if (s.n_rule_c && !(*s.n_rule_c > 0)) throw InvalidParameter("sweep: n_rule_c must be positive");
  if (s.d.empty() || s.k.empty() || s.epsilon.empty() || s.design.empty() || s.noise.empty() || s.adversary.empty() ||
      s.t.empty() || s.variants.empty()) {
    throw InvalidParameter("sweep: every grid must be non-empty");
  }
  if (s.trials < 1) throw InvalidParameter("sweep: trials must be >= 1");
  for (double e : s.epsilon)
    if (!(e >= 0 && e < 0.5)) throw InvalidParameter("sweep: epsilon must lie in [0, 0.5)");
  for (const auto& d : s.design) family_named(d, s.student_dof);
  for (const auto& b : s.backend) backend_from_string(b);
  if (!json::parse(s.estimator_json).is_object()) throw InvalidParameter("sweep: estimator must be a JSON object");
}

SweepSpec parse_sweep_spec(const std::string& text) {
  try {
    const json j = json::parse(text);
    reject_unknown(j,
                   {"n", "n_rule_c", "d", "k", "epsilon", "design", "noise", "adversary", "t", "backend", "trials",
                    "base_seed", "variants", "beta_norm", "student_dof", "covariance", "noise_sigma", "cauchy_scale",
                    "inlier_alpha", "spike_magnitude", "junk_magnitude", "leverage_scale", "leverage_shift",
                    "estimator", "record_wall_time"},
                   "sweep spec");
    SweepSpec s;
    if (j.contains("n")) s.n = j.at("n").get<std::vector<Index>>();
    if (j.contains("n_rule_c")) s.n_rule_c = j.at("n_rule_c").get<double>();
    s.d = j.at("d").get<std::vector<Index>>();
    s.k = j.at("k").get<std::vector<int>>();
    s.epsilon = j.at("epsilon").get<std::vector<double>>();
    s.design = j.value("design", std::vector<std::string>{"gaussian"});
    s.noise = j.value("noise", std::vector<std::string>{"gaussian"});
    s.adversary = j.value("adversary", std::vector<std::string>{"none"});
    s.t = j.value("t", std::vector<int>{1});
    s.backend = j.value("backend", std::vector<std::string>{});
    s.trials = j.value("trials", 1);
    s.base_seed = j.value("base_seed", std::uint64_t{0});
    if (j.contains("variants")) {
      s.variants.clear();
      for (const auto& v : j.at("variants")) s.variants.push_back(variant_from_string(v.get<std::string>()));
    }
    s.beta_norm = j.value("beta_norm", s.beta_norm);
    s.student_dof = j.value("student_dof", s.student_dof);
    if (j.contains("covariance")) s.covariance = covariance_from_json(j.at("covariance"));
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.cauchy_scale = j.value("cauchy_scale", s.cauchy_scale);
    s.inlier_alpha = j.value("inlier_alpha", s.inlier_alpha);
    s.spike_magnitude = j.value("spike_magnitude", s.spike_magnitude);
    s.junk_magnitude = j.value("junk_magnitude", s.junk_magnitude);
    s.leverage_scale = j.value("leverage_scale", s.leverage_scale);
    s.leverage_shift = j.value("leverage_shift", s.leverage_shift);
    if (j.contains("estimator")) s.estimator_json = j.at("estimator").dump();
    s.record_wall_time = j.value("record_wall_time", false);
    validate_sweep(s);
    return s;
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("sweep spec: ") + e.what());
  }
}

SweepResult run_sweep(const SweepSpec& spec, int threads) {
  validate_sweep(spec);
  const std::vector<Cell> cells = expand(spec);
  const size_t tasks = cells.size() * static_cast<size_t>(spec.trials);
  std::vector<std::string> out(tasks);
  std::vector<int> fails(tasks, 0);
  std::atomic<size_t> next{0};

  auto work = [&]() {
    for (size_t task = next++; task < tasks; task = next++) {
      const size_t ci = task / static_cast<size_t>(spec.trials);
      const int trial = static_cast<int>(task % static_cast<size_t>(spec.trials));
      const Cell& c = cells[ci];
      const std::uint64_t seed = spec.base_seed + fnv1a(c.key()) + static_cast<std::uint64_t>(trial);
      std::string prefix;
      {
        std::ostringstream os;
        os << kCsvSchemaVersion << ',' << ci << ',' << trial << ',';
        prefix = os.str();
      }
      std::optional<RegressionInstance> inst;
      std::string inst_error;
      try {
        inst = datagen::make_instance(cell_instance(spec, c, seed));
      } catch (const std::exception& e) {
        inst_error = e.what();
      }
      std::ostringstream rows;
      for (Variant v : spec.variants) {
        std::ostringstream row;
        std::string backend_name = c.backend;
        row << prefix << to_string(v) << ',' << c.n << ',' << c.d << ',' << c.k << ',' << fmt(c.epsilon) << ','
            << c.design << ',' << c.noise << ',' << c.adversary << ',' << c.t << ',';
        try {
          if (!inst) throw InvalidParameter(inst_error);
          const EstimatorConfig cfg = apply_variant(cell_config(spec, c), v);
          backend_name = to_string(cfg.backend.kind);
          const auto t0 = std::chrono::steady_clock::now();
          const EstimateResult r = estimate(*inst, cfg);
          const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          const Metrics m = compute_metrics(r.beta_hat, *inst);
          const Diagnostics& dg = r.diagnostics;
          row << backend_name << ',' << seed << ",ok," << fmt(m.sigma_error) << ',' << fmt(m.l2_error) << ','
              << fmt(m.l1_error) << ',' << fmt(m.support_precision) << ',' << fmt(m.support_recall) << ','
              << fmt(dg.lambda_used) << ',' << (dg.tau_used ? fmt(*dg.tau_used) : "NA") << ','
              << fmt(dg.sigma_max_hat) << ',' << fmt(dg.b2t_certified) << ',' << r.filter.iterations << ','
              << fmt(r.filter.final_weight_sum) << ',' << (r.filter.cap_hit ? 1 : 0) << ','
              << (r.solve.converged ? 1 : 0) << ',' << (spec.record_wall_time ? fmt(secs) : "NA") << ",\n";
        } catch (const std::exception& e) {
          ++fails[task];
          row << (backend_name.empty() ? "NA" : backend_name) << ',' << seed << ",error";
          for (int q = 0; q < 14; ++q) row << ",NA";
          row << ',' << clean_message(e.what()) << '\n';
        }
        rows << row.str();
      }
      out[task] = rows.str();
    }
  };

  const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(tasks)));
  if (nthreads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  SweepResult res;
  res.csv = kHeader;
  for (size_t i = 0; i < tasks; ++i) {
    res.csv += out[i];
    res.failures += fails[i];
  }
  res.rows = static_cast<int>(tasks * spec.variants.size());
  return res;
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw InvalidParameter("CSV has no column '" + name + "'");
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> f;
    std::string cur;
    for (char ch : l) {
      if (ch == ',') {
        f.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    f.push_back(cur);
    return f;
  };
  if (!std::getline(in, line)) throw InvalidParameter("CSV is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != t.header.size()) throw InvalidParameter("CSV row has the wrong number of fields");
    t.rows.push_back(std::move(f));
  }
  return t;
}

namespace {

// Linear interpolation between order statistics.
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<int> group_columns(const CsvTable& t, const std::string& group_by) {
  std::vector<int> cols;
  std::istringstream in(group_by);
  std::string name;
  while (std::getline(in, name, ','))
    if (!name.empty()) cols.push_back(t.column(name));
  return cols;
}

using Groups = std::map<std::pair<std::string, std::string>, std::vector<double>>;

Groups collect(const CsvTable& t, const std::vector<int>& gcols, int metric) {
  const int status = t.column("status");
  const int variant = t.column("variant");
  Groups g;
  for (const auto& r : t.rows) {
    if (r[status] != "ok") continue;
    std::string key;
    for (size_t i = 0; i < gcols.size(); ++i) key += (i ? "," : "") + r[gcols[i]];
    g[{key, r[variant]}].push_back(std::stod(r[metric]));
  }
  return g;
}

}  // namespace

std::string report(const std::string& csv, const std::string& group_by) {
  const CsvTable t = parse_csv(csv);
  const auto gcols = group_columns(t, group_by);
  std::ostringstream os;
  for (const char* metric : {"sigma_error", "l2_error", "l1_error"}) {
    const Groups g = collect(t, gcols, t.column(metric));
    os << metric << '\n';
    char line[256];
    std::snprintf(line, sizeof line, "  %-24s %-12s %6s %14s %14s\n", group_by.c_str(), "variant", "count", "median",
                  "iqr");
    os << line;
    for (const auto& [key, vals] : g) {
      std::snprintf(line, sizeof line, "  %-24s %-12s %6zu %14.6g %14.6g\n", key.first.c_str(), key.second.c_str(),
                    vals.size(), quantile(vals, 0.5), quantile(vals, 0.75) - quantile(vals, 0.25));
      os << line;
    }
  }
  return os.str();
}

std::string gnuplot_columns(const std::string& csv, const std::string& group_by, const std::string& metric,
                            const std::string& variant) {
  const CsvTable t = parse_csv(csv);
  const Groups g = collect(t, group_columns(t, group_by), t.column(metric));
  std::ostringstream os;
  os << "# " << group_by << " median q1 q3\n";
  for (const auto& [key, vals] : g) {
    if (key.second != variant) continue;
    std::string k = key.first;
    std::replace(k.begin(), k.end(), ',', ' ');
    os << k << ' ' << fmt(quantile(vals, 0.5)) << ' ' << fmt(quantile(vals, 0.25)) << ' ' << fmt(quantile(vals, 0.75))
       << '\n';
  }
  return os.str();
}

}  // namespace rsreg
