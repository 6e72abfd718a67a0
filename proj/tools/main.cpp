#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "rsreg/bench.hpp"
#include "rsreg/instance_io.hpp"
#include "rsreg/oracle.hpp"
#include "rsreg/pipeline.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kPartialFailure = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rsreg::InvalidParameter("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int thread_budget() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("RSREG_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust sparse regression under oblivious and adaptive corruption"};
  app.require_subcommand(1);

  std::string spec_path, instance_dir, config_path, out_path, trace_path, dump_path, in_path, group_by = "epsilon";
  std::string gnuplot_metric, gnuplot_variant = "full";
  int oracle_k = 1, oracle_t = 1;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic instance directory from a JSON spec");
  gen->add_option("--spec", spec_path, "instance spec JSON")->required();
  gen->add_option("--out", out_path, "output directory")->required();

  auto* est = app.add_subcommand("estimate", "Run the estimator on an instance directory");
  est->add_option("--instance", instance_dir)->required();
  est->add_option("--config", config_path, "estimator config JSON");
  est->add_option("--out", out_path, "result JSON (stdout when omitted)");
  est->add_option("--trace", trace_path, "filter trace, one JSON object per line");
  est->add_option("--dump-relaxation", dump_path, "binary dump of the final relaxation solution");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep and write a CSV");
  sweep->add_option("--spec", spec_path)->required();
  sweep->add_option("--out", out_path)->required();

  auto* rep = app.add_subcommand("report", "Median/IQR tables from a sweep CSV");
  rep->add_option("--in", in_path)->required();
  rep->add_option("--group-by", group_by);
  rep->add_option("--gnuplot", gnuplot_metric, "emit gnuplot columns for this metric instead");
  rep->add_option("--variant", gnuplot_variant, "variant for --gnuplot");

  auto* orc = app.add_subcommand("oracle", "");  // hidden: brute-force sparse moment maximum
  orc->group("");
  orc->add_option("--instance", instance_dir)->required();
  orc->add_option("--k", oracle_k);
  orc->add_option("--t", oracle_t);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const rsreg::RegressionInstance inst = rsreg::datagen::make_instance(rsreg::instance_spec_from_json(slurp(spec_path)));
      rsreg::write_instance(inst, out_path);
    } else if (*est) {
      const rsreg::RegressionInstance inst = rsreg::read_instance(instance_dir);
      rsreg::EstimatorConfig cfg = config_path.empty() ? rsreg::EstimatorConfig::defaults_for(1)
                                                       : rsreg::read_config(config_path);
      std::ofstream trace;
      rsreg::EstimateHooks hooks;
      if (!trace_path.empty()) {
        trace.open(trace_path);
        if (!trace) throw std::runtime_error("cannot write " + trace_path);
        hooks.trace = &trace;
      }
      if (!dump_path.empty()) hooks.dump_path = dump_path;
      const std::string doc = rsreg::result_to_json(rsreg::estimate(inst, cfg, hooks)) + "\n";
      if (out_path.empty()) {
        std::cout << doc;
      } else {
        spill(out_path, doc);
      }
    } else if (*sweep) {
      const rsreg::SweepSpec spec = rsreg::parse_sweep_spec(slurp(spec_path));
      const rsreg::SweepResult res = rsreg::run_sweep(spec, thread_budget());
      spill(out_path, res.csv);
      std::cerr << res.rows << " rows, " << res.failures << " failed\n";
      if (res.failures > 0) return kPartialFailure;
    } else if (*rep) {
      const std::string csv = slurp(in_path);
      std::cout << (gnuplot_metric.empty() ? rsreg::report(csv, group_by)
                                           : rsreg::gnuplot_columns(csv, group_by, gnuplot_metric, gnuplot_variant));
    } else if (*orc) {
      const rsreg::RegressionInstance inst = rsreg::read_instance(instance_dir);
      const rsreg::Vector w = rsreg::Vector::Constant(inst.n(), 1.0 / static_cast<double>(inst.n()));
      const auto r = rsreg::oracle::sparse_moment_max(inst.design, w, oracle_k, oracle_t);
      std::cout << "value " << r.value << (r.exact ? " exact" : " lower_bound") << "\nsupport";
      for (auto j : r.argmax_support) std::cout << ' ' << j;
      std::cout << '\n';
    }
  } catch (const rsreg::InvalidParameter& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
