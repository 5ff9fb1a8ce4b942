#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "odr_dro/applications.hpp"
#include "odr_dro/harness.hpp"
#include "odr_dro/instance_io.hpp"
#include "odr_dro/verify.hpp"

namespace {

using odr::DroInstance;

enum ExitCode { kOk = 0, kUsage = 1, kSolveFailed = 2, kSandwich = 3, kRowErrors = 4, kVerifyFailed = 5 };

// Applies a flat JSON object whose keys are long flag names to the options of
// cmd that were not given on the command line.
void apply_json_config(CLI::App* cmd, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw odr::InputError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw odr::InputError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw odr::InputError("config: expected a JSON object");
  const auto text = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") throw odr::InputError("config: unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    std::string joined;
    if (value.is_array()) {
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + text(v);
    } else {
      joined = text(value);
    }
    try {
      opt->add_result(joined);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw odr::InputError("config: bad value for '" + key + "': " + e.what());
    }
  }
}

struct InstanceSource {
  std::string path;
  std::string app = "newsvendor";
  int m = 10;
  std::uint64_t seed = 0;
  bool nonneg_demand = false;

  void add_to(CLI::App* cmd, bool with_path) {
    if (with_path) cmd->add_option("--instance", path, "Instance JSON file (overrides --app/--m/--seed)");
    cmd->add_option("--app", app, "Generator: newsvendor, cvar, or cvar-fixture (three-asset case)")
        ->check(CLI::IsMember({"newsvendor", "cvar", "cvar-fixture"}));
    cmd->add_option("--m", m, "Dimension of the uncertainty")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Generator seed");
    cmd->add_flag("--nonneg-demand", nonneg_demand, "Newsvendor: restrict demand to xi >= 0");
  }
};

DroInstance generate(const std::string& app, int m, std::uint64_t seed, bool nonneg_demand) {
  if (app == "cvar") return odr::gen_cvar(m, seed);
  if (app == "cvar-fixture") return odr::cvar_pca_counterexample();
  DroInstance in = odr::gen_newsvendor(m, seed);
  if (nonneg_demand) {
    in.support.a = -odr::Matrix::Identity(m, m);
    in.support.b = odr::Vector::Zero(m);
    in.label += " nonneg-demand";
  }
  return in;
}

DroInstance load(const InstanceSource& src) {
  if (src.path.empty()) return generate(src.app, src.m, src.seed, src.nonneg_demand);
  std::ifstream f(src.path);
  if (!f) throw odr::InputError("cannot open " + src.path);
  std::stringstream buf;
  buf << f.rdbuf();
  return odr::instance_from_json(buf.str());
}

std::vector<int> parse_ints(const std::string& list) {
  std::vector<int> out;
  std::stringstream ss(list);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    try {
      out.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw odr::InputError("not an integer: '" + part + "'");
    }
  }
  return out;
}

struct SpecFlags {
  std::string m1;  // integer or fraction such as 0.2
  double rho = 10.0;
  int max_iter = 500;
  double tol = 1e-6;
  double time_limit = 300.0;
  bool fixed_rho = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--m1", m1, "Reduced dimension: integer, or a fraction of m in (0, 1)");
    cmd->add_option("--rho", rho, "Initial ADMM penalty")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iter", max_iter, "ADMM iteration cap")->check(CLI::PositiveNumber);
    cmd->add_option("--tol", tol, "ADMM primal and dual residual tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--time-limit", time_limit, "Seconds per solve")->check(CLI::PositiveNumber);
    cmd->add_flag("--fixed-rho", fixed_rho, "Disable residual balancing of the penalty");
  }

  odr::RunSpec spec(odr::Method method) const {
    odr::RunSpec s;
    s.method = method;
    if (!m1.empty()) {
      const double v = std::stod(m1);
      if (m1.find('.') != std::string::npos && v < 1.0) {
        s.m1.fraction = v;
      } else {
        s.m1.absolute = static_cast<int>(v);
      }
    }
    s.admm.rho = rho;
    s.admm.max_iter = max_iter;
    s.admm.tol_primal = s.admm.tol_dual = tol;
    s.admm.adaptive_rho = !fixed_rho;
    s.time_limit = time_limit;
    return s;
  }
};

nlohmann::json report_json(const odr::BoundReport& r, const DroInstance& in) {
  nlohmann::json j;
  j["instance"] = in.label;
  j["method"] = odr::to_string(r.method);
  j["m1"] = r.m1;
  j["value"] = r.value ? nlohmann::json(*r.value) : nlohmann::json(nullptr);
  if (r.value && std::isinf(*r.value)) j["value"] = *r.value > 0 ? "inf" : "-inf";
  j["certified"] = r.certified;
  j["seconds"] = r.seconds;
  j["iterations"] = r.iterations;
  j["status"] = r.status;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw odr::InputError("cannot write " + path);
  f << text;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw odr::InputError("cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounds for moment-based distributionally robust problems via dimensionality reduction"};
  app.require_subcommand(1);

  // gen
  CLI::App* gen = app.add_subcommand("gen", "Write a seeded instance as JSON");
  InstanceSource gen_src;
  std::string gen_out;
  gen_src.add_to(gen, false);
  gen->add_option("--out,-o", gen_out, "Output file (stdout when omitted)");

  // solve
  CLI::App* solve = app.add_subcommand("solve", "Run one method on one instance and print a JSON report");
  InstanceSource solve_src;
  SpecFlags solve_flags;
  std::string solve_method = "full", solve_out;
  solve_src.add_to(solve, true);
  solve_flags.add_to(solve);
  solve->add_option("--method", solve_method, "full, pca-lb, pca-ub, odr-lb, odr-ub, odr-rlb, heuristic-b");
  solve->add_option("--out,-o", solve_out, "Output file (stdout when omitted)");
  std::string solve_config;
  solve->add_option("--config", solve_config, "JSON file of flag values; flags override it");

  // bench
  CLI::App* bench = app.add_subcommand("bench", "Run a grid of sizes x seeds x methods and write CSV");
  std::string bench_app = "newsvendor", bench_sizes = "10,20,40", bench_methods = "full,pca-lb,odr-lb,odr-ub";
  std::string bench_out, bench_instances;
  int bench_seeds = 5, bench_first_seed = 0, bench_threads = 0;
  bool bench_no_timing = false, bench_nonneg = false;
  SpecFlags bench_flags;
  bench->add_option("--app", bench_app, "newsvendor or cvar")->check(CLI::IsMember({"newsvendor", "cvar"}));
  bench->add_option("--sizes", bench_sizes, "Comma-separated dimensions m");
  bench->add_option("--seeds", bench_seeds, "Instances per size")->check(CLI::PositiveNumber);
  bench->add_option("--first-seed", bench_first_seed, "Seed of the first instance");
  bench->add_option("--methods", bench_methods, "Comma-separated methods");
  bench->add_option("--instances", bench_instances, "Comma-separated instance JSON files instead of generation");
  bench->add_option("--threads", bench_threads, "Worker threads (capped by ODR_DRO_THREADS)");
  bench->add_option("--out,-o", bench_out, "CSV file (stdout when omitted)");
  bench->add_flag("--no-timing", bench_no_timing, "Write '-' in the Time column");
  bench->add_flag("--nonneg-demand", bench_nonneg, "Newsvendor: restrict demand to xi >= 0");
  bench_flags.add_to(bench);
  std::string bench_config;
  bench->add_option("--config", bench_config, "JSON file of flag values; flags override it");

  // report
  CLI::App* report = app.add_subcommand("report", "Summarize a bench CSV as a table and SVG plots");
  std::string report_csv, report_out, report_svg;
  report->add_option("csv", report_csv, "Bench CSV")->required();
  report->add_option("--out,-o", report_out, "Table file (stdout when omitted)");
  report->add_option("--svg-prefix", report_svg, "Write <prefix>-gap1.svg, -gap2, -interval, -time");

  // verify
  CLI::App* verify = app.add_subcommand("verify", "Run the acceptance property suites");
  std::string verify_which;
  verify->add_option("--criteria", verify_which, "Comma-separated criterion numbers (all when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      write_text(gen_out, odr::instance_to_json(generate(gen_src.app, gen_src.m, gen_src.seed, gen_src.nonneg_demand)));
      return kOk;
    }
    if (solve->parsed()) {
      if (!solve_config.empty()) apply_json_config(solve, solve_config);
      const DroInstance in = load(solve_src);
      const odr::BoundReport r = odr::run_method(in, solve_flags.spec(odr::parse_method(solve_method)));
      write_text(solve_out, report_json(r, in).dump(2) + "\n");
      if (!r.error.empty()) {
        std::cerr << "error: " << r.error << "\n";
        return kSolveFailed;
      }
      return r.value ? kOk : kSolveFailed;
    }
    if (bench->parsed()) {
      if (!bench_config.empty()) apply_json_config(bench, bench_config);
      std::vector<odr::MatrixInstance> instances;
      if (!bench_instances.empty()) {
        std::stringstream ss(bench_instances);
        std::string path;
        int index = 0;
        while (std::getline(ss, path, ',')) {
          if (path.empty()) continue;
          const DroInstance in = odr::instance_from_json(read_text(path));
          instances.push_back({in.m(), index++, in});
        }
      } else {
        for (int m : parse_ints(bench_sizes)) {
          if (m < 1) throw odr::InputError("sizes must be positive");
          for (int i = 0; i < bench_seeds; ++i) {
            const auto seed = static_cast<std::uint64_t>(bench_first_seed + i);
            instances.push_back({m, i, generate(bench_app, m, seed, bench_nonneg)});
          }
        }
      }
      std::vector<odr::RunSpec> specs;
      for (odr::Method m : odr::parse_methods(bench_methods)) specs.push_back(bench_flags.spec(m));
      odr::MatrixOptions opts;
      opts.threads = bench_threads;
      opts.on_row = [](const odr::MatrixRow& row) {
        if (!row.report.error.empty()) {
          std::cerr << "size " << row.size << " inst " << row.index << " " << row.label << ": "
                    << row.report.error << "\n";
        }
      };
      std::vector<odr::MatrixRow> rows;
      try {
        rows = odr::run_matrix(instances, specs, opts);
      } catch (const odr::SandwichViolation& e) {
        std::cerr << e.what();
        return kSandwich;
      }
      std::ostringstream csv;
      odr::write_csv(csv, rows, !bench_no_timing);
      write_text(bench_out, csv.str());
      for (const auto& row : rows) {
        if (!row.report.error.empty()) return kRowErrors;
      }
      return kOk;
    }
    if (report->parsed()) {
      std::istringstream csv(read_text(report_csv));
      const auto summary = odr::summarize(odr::read_csv(csv));
      std::ostringstream table;
      odr::write_report(table, summary);
      write_text(report_out, table.str());
      if (!report_svg.empty()) {
        const std::pair<const char*, odr::PlotMetric> plots[] = {{"gap1", odr::PlotMetric::kGap1},
                                                                 {"gap2", odr::PlotMetric::kGap2},
                                                                 {"interval", odr::PlotMetric::kInterval},
                                                                 {"time", odr::PlotMetric::kTime}};
        for (const auto& [suffix, metric] : plots) {
          write_text(report_svg + "-" + suffix + ".svg", odr::render_svg(summary, metric));
        }
      }
      return kOk;
    }
    if (verify->parsed()) {
      odr::VerifyOptions opts;
      opts.criteria = parse_ints(verify_which);
      bool ok = true;
      for (const auto& r : odr::run_acceptance(opts)) {
        std::cout << odr::format_result(r) << std::endl;
        ok = ok && r.passed;
      }
      return ok ? kOk : kVerifyFailed;
    }
  } catch (const odr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: bad number: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
