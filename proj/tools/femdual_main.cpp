#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "femdual/experiments.hpp"

namespace {

using namespace femdual;

std::vector<int> parse_levels(const std::string& text) {
  const auto dots = text.find("..");
  std::vector<int> levels;
  if (dots == std::string::npos) {
    levels.push_back(std::stoi(text));
    return levels;
  }
  const int a = std::stoi(text.substr(0, dots));
  const int b = std::stoi(text.substr(dots + 2));
  for (int l = a; l <= b; ++l) levels.push_back(l);
  return levels;
}

void apply_eps_policy(RunOptions& opt, const std::string& text) {
  if (text == "h") {
    opt.eps_follows_h = true;
  } else if (text.rfind("fixed:", 0) == 0) {
    opt.eps_follows_h = false;
    opt.eps_fixed = std::stod(text.substr(6));
  } else {
    throw CLI::ValidationError("--eps-policy", "expected 'h' or 'fixed:V'");
  }
}

void apply_eps_stop_policy(RunOptions& opt, const std::string& text) {
  if (text == "h/20") {
    opt.eps_stop_follows_h = true;
  } else if (text.rfind("fixed:", 0) == 0) {
    opt.eps_stop_follows_h = false;
    opt.eps_stop_fixed = std::stod(text.substr(6));
  } else {
    throw CLI::ValidationError("--eps-stop-policy",
                               "expected 'h/20' or 'fixed:V'");
  }
}

void dump_fields(const ExperimentReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < report.fields.size(); ++i) {
    const std::string path = dir + "/" + report.name + "_level" +
                             std::to_string(report.rows[i].level) + ".csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "'");
    write_p0_csv(out, report.fields[i]);
  }
}

int finish(const ExperimentReport& report, const std::string& out_path,
           const std::string& fields_dir) {
  if (!out_path.empty())
    emit_report(report, out_path);
  else
    write_report(std::cout, report);
  if (!fields_dir.empty()) dump_fields(report, fields_dir);
  if (!report.all_converged) {
    std::cerr << report.name << ": a solver did not reach its stopping "
              << "criterion; report written anyway\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonconforming and mixed finite element experiments on "
               "(-1,1)^2: convergence tables as CSV"};
  app.require_subcommand(1);

  std::string levels_text = "3..6";
  std::string eps_policy = "h";
  std::string eps_stop_policy = "h/20";
  std::string method;
  std::string out_path;
  std::string fields_dir;
  double alpha = 10.0;
  double radius = 0.5;
  double p = 1.5;
  double tau = 1.0;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--levels", levels_text, "refinement levels A..B");
    cmd->add_option("--eps-policy", eps_policy, "h | fixed:V");
    cmd->add_option("--eps-stop-policy", eps_stop_policy, "h/20 | fixed:V");
    cmd->add_option("--tau", tau, "step size of the iterations");
    cmd->add_option("--out", out_path, "CSV output file (default stdout)");
    cmd->add_option("--dump-fields", fields_dir,
                    "directory for per-element field CSVs");
  };

  CLI::App* poisson = app.add_subcommand("poisson", "mixed Poisson methods");
  poisson->add_option("--method", method,
                      "classical_mixed | modified_mixed | cr_primal");
  add_common(poisson);

  CLI::App* tv = app.add_subcommand("tv", "total variation minimization");
  tv->add_option("--alpha", alpha, "fidelity weight");
  tv->add_option("--radius", radius, "radius of the data disc");
  tv->add_option("--method", method, "cr | p1");
  add_common(tv);

  CLI::App* inf = app.add_subcommand("inf_laplace", "infinity Laplacian");
  inf->add_option("--method", method, "rt_dual | p1_admm");
  add_common(inf);

  CLI::App* obstacle = app.add_subcommand("obstacle", "obstacle problem");
  add_common(obstacle);

  CLI::App* plap = app.add_subcommand("p_laplace", "p-Dirichlet problem");
  plap->add_option("--p", p, "exponent p > 1");
  add_common(plap);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;  // spec exit codes: 3 is a configuration error
  }

  try {
    const std::vector<int> levels = parse_levels(levels_text);
    RunOptions opt;
    apply_eps_policy(opt, eps_policy);
    apply_eps_stop_policy(opt, eps_stop_policy);
    opt.tau = tau;

    ExperimentReport report;
    if (poisson->parsed()) {
      PoissonVariant variant = PoissonVariant::classical_mixed;
      if (method == "modified_mixed")
        variant = PoissonVariant::modified_mixed;
      else if (method == "cr_primal")
        variant = PoissonVariant::cr_primal;
      else if (!method.empty() && method != "classical_mixed")
        throw std::invalid_argument("unknown poisson method '" + method + "'");
      report = run_poisson(levels, variant, opt);
    } else if (tv->parsed()) {
      TvMethod m = TvMethod::cr;
      if (method == "p1")
        m = TvMethod::p1;
      else if (!method.empty() && method != "cr")
        throw std::invalid_argument("unknown tv method '" + method + "'");
      report = run_tv(levels, alpha, radius, m, opt);
    } else if (inf->parsed()) {
      InfLaplaceMethod m = InfLaplaceMethod::rt_dual;
      if (method == "p1_admm")
        m = InfLaplaceMethod::p1_admm;
      else if (!method.empty() && method != "rt_dual")
        throw std::invalid_argument("unknown inf_laplace method '" + method +
                                    "'");
      report = run_inf_laplace(levels, m, opt);
    } else if (obstacle->parsed()) {
      report = run_obstacle(levels, opt);
    } else {
      report = run_p_laplace(levels, p, opt);
    }
    return finish(report, out_path, fields_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 3;
  } catch (const std::length_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
