#include "ktrace_cli/app.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "ktrace/errors.hpp"
#include "ktrace_cli/experiments.hpp"
#include "ktrace_cli/problem.hpp"

namespace ktrace::cli {

namespace {

struct OutputTarget {
  std::string path;

  template <class Fn>
  void write(std::ostream& fallback, Fn&& fn) const {
    if (path.empty() || path == "-") {
      fn(fallback);
      return;
    }
    std::ofstream file(path);
    if (!file) throw UsageError("cannot open " + path + " for writing");
    fn(file);
  }
};

void emit_results(std::ostream& out, const std::vector<ResultRow>& rows) {
  write_header(out, kResultColumns);
  write_rows(out, rows);
}

std::string function_help() { return "exp, log, sqrt, inverse"; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Krylov-aware stochastic trace estimation of tr(f(A))", "ktrace"};
  app.set_config("--config", "", "INI file with one [section] per subcommand; flags override it");
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "Worker threads (default: KTRACE_WORKERS or all cores)");

  // trace
  auto* trace = app.add_subcommand("trace", "Estimate tr(f(A)) for one problem");
  TraceOptions topt;
  std::string alg = "krylov";
  EstimatorConfig cfg;
  cfg.n = 50;
  std::string dist = "gaussian";
  double filter_beta = 10.0;
  bool relative = false;
  std::string trace_csv;
  trace->add_option("--problem", topt.problem, "spin:N=..,h=.. | synthetic:slow|fast,d=..,kappa=..[,rho=..] | powerlaw:d=..,c=.. | mtx:path")
      ->required();
  trace->add_option("--f", topt.function, "Function: " + function_help());
  trace->add_option("--beta", topt.beta, "beta for exp(-beta x)")->capture_default_str();
  trace->add_flag("--shift-min", topt.shift_min, "Evaluate exp(-beta (x - lambda_min))");
  trace->add_option("--alg", alg, "krylov, girard, hutchpp, restart, ada, ahutchpp")->capture_default_str();
  trace->add_option("--b", cfg.b, "Sketch block size");
  trace->add_option("--q", cfg.q, "Deflation depth");
  trace->add_option("--m", cfg.m, "Residual samples");
  trace->add_option("--n", cfg.n, "Quadrature depth")->capture_default_str();
  trace->add_option("--r", cfg.r, "Restart cycles");
  trace->add_option("--seed", cfg.seed, "Seed");
  trace->add_option("--dist", dist, "Residual probes: gaussian or rademacher")->check(CLI::IsMember({"gaussian", "rademacher"}));
  trace->add_option("--eps", cfg.eps, "Adaptive error target");
  trace->add_flag("--relative", relative, "Treat --eps as relative to a pilot estimate");
  trace->add_option("--delta", cfg.delta, "Adaptive failure probability")->capture_default_str();
  trace->add_option("--q-max", cfg.q_max, "Adaptive basis cap in blocks");
  trace->add_option("--filter-beta", filter_beta, "Restart filter exp(-beta0 (x - a))")->capture_default_str();
  trace->add_option("--batch-width", cfg.batch_width, "Residual probes per block apply");
  trace->add_option("--trials", topt.trials, "Independent runs with seeds seed, seed+1, ...")->check(CLI::PositiveNumber);
  trace->add_option("--csv", trace_csv, "Also write CSV rows to this file");

  // spin
  auto* spin = app.add_subcommand("spin", "Partition function of the XY spin chain over a beta grid");
  SpinOptions sopt;
  std::vector<double> betas;
  int beta_points = 40;
  double beta_min = 1e-3, beta_max = 1e3;
  std::vector<std::string> runs;
  std::string spin_out;
  spin->add_option("--spins", sopt.spins, "Spins (d = 2^N, N <= 12)")->capture_default_str();
  spin->add_option("--field", sopt.field, "Field strength")->capture_default_str();
  spin->add_option("--trials", sopt.trials, "Trials")->capture_default_str()->check(CLI::PositiveNumber);
  spin->add_option("--betas", betas, "Explicit beta values (overrides the log grid)");
  spin->add_option("--beta-points", beta_points, "Log-spaced grid size")->capture_default_str();
  spin->add_option("--beta-min", beta_min)->capture_default_str();
  spin->add_option("--beta-max", beta_max)->capture_default_str();
  spin->add_option("--run", runs, "Estimator config alg:key=value,... (repeatable)");
  spin->add_option("--seed", sopt.seed, "Base seed");
  spin->add_option("--out", spin_out, "CSV path (default stdout)");

  // projection
  auto* proj = app.add_subcommand("projection", "Projection residual grid on synthetic spectra");
  ProjectionOptions popt;
  std::string proj_out;
  proj->add_option("--spectrum", popt.spectrum)->check(CLI::IsMember({"slow", "fast"}))->capture_default_str();
  proj->add_option("--d", popt.d)->capture_default_str();
  proj->add_option("--kappa", popt.kappa)->capture_default_str();
  proj->add_option("--rho", popt.rho)->capture_default_str();
  proj->add_option("--f", popt.function, "Function: " + function_help())->capture_default_str();
  proj->add_option("--q", popt.qs, "Depths");
  proj->add_option("--b", popt.bs, "Block sizes");
  proj->add_option("--r", popt.rs, "Restart cycle counts");
  proj->add_option("--seed", popt.seed);
  proj->add_option("--filter-beta", popt.filter_beta)->capture_default_str();
  proj->add_option("--max-qb", popt.max_qb)->capture_default_str();
  proj->add_option("--out", proj_out, "CSV path (default stdout)");

  // adaptive
  auto* adapt = app.add_subcommand("adaptive", "Adaptive estimators over relative targets 2^-p");
  AdaptiveOptions aopt;
  std::vector<std::string> algs;
  std::string adapt_out;
  adapt->add_option("--problem", aopt.problem)->capture_default_str();
  adapt->add_option("--f", aopt.function, "Function: " + function_help())->capture_default_str();
  adapt->add_option("--p-min", aopt.p_min)->capture_default_str();
  adapt->add_option("--p-max", aopt.p_max)->capture_default_str();
  adapt->add_option("--trials", aopt.trials)->capture_default_str()->check(CLI::PositiveNumber);
  adapt->add_option("--alg", algs, "ada and/or ahutchpp (default both)")->check(CLI::IsMember({"ada", "ahutchpp"}));
  adapt->add_option("--b", aopt.b)->capture_default_str();
  adapt->add_option("--n", aopt.n)->capture_default_str();
  adapt->add_option("--delta", aopt.delta)->capture_default_str();
  adapt->add_option("--q-max", aopt.q_max);
  adapt->add_option("--seed", aopt.seed);
  adapt->add_flag("--exact-eps", aopt.exact_eps, "eps = 2^-p |tr| from the exact trace instead of a pilot");
  adapt->add_option("--out", adapt_out, "CSV path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const int pool = workers > 0 ? workers : worker_count();
    if (trace->parsed()) {
      if (topt.function.empty()) throw UsageError("--f is required (supported: " + function_help() + ")");
      const auto known = function_names();
      if (std::find(known.begin(), known.end(), topt.function) == known.end()) {
        throw UsageError("unknown function '" + topt.function + "' (supported: " + function_help() + ")");
      }
      std::ostringstream text;
      text << alg << ":b=" << cfg.b << ",q=" << cfg.q << ",m=" << cfg.m << ",n=" << cfg.n;
      if (alg == "restart") text << ",r=" << cfg.r << ",filter_beta=" << format_number(filter_beta);
      if (alg == "ada" || alg == "ahutchpp") text << ",eps=" << format_number(cfg.eps) << ",delta=" << format_number(cfg.delta);
      text << ",dist=" << dist << ",seed=" << cfg.seed;
      RunSpec run = parse_run(text.str());
      run.cfg.eps = cfg.eps;
      run.cfg.relative_eps = relative;
      run.cfg.q_max = cfg.q_max;
      run.cfg.batch_width = cfg.batch_width;
      run.text = text.str();
      if (alg == "girard" && cfg.b != 0) throw UsageError("girard runs without deflation; drop --b");
      topt.run = run;
      const auto rows = run_trace(topt, pool);
      for (const ResultRow& r : rows) {
        out << "trial=" << r.trial << " total=" << format_number(*r.estimate) << " t_defl=" << format_number(r.t_defl)
            << " t_rem=" << format_number(r.t_rem) << " matvecs=" << format_number(r.matvecs)
            << " deflation_rank=" << format_number(r.deflation_rank) << " samples=" << format_number(r.samples);
        if (r.exact) out << " exact=" << format_number(*r.exact) << " rel_error=" << format_number(r.rel_error.value_or(0.0));
        out << '\n';
      }
      if (!trace_csv.empty()) OutputTarget{trace_csv}.write(out, [&](std::ostream& o) { emit_results(o, rows); });
    } else if (spin->parsed()) {
      sopt.betas = betas.empty() ? log_grid(beta_min, beta_max, beta_points) : betas;
      if (runs.empty()) runs = default_spin_runs();
      for (const auto& r : runs) sopt.runs.push_back(parse_run(r));
      const auto rows = run_spin(sopt, pool);
      OutputTarget{spin_out}.write(out, [&](std::ostream& o) { emit_results(o, rows); });
    } else if (proj->parsed()) {
      make_function(popt.function);
      const auto rows = run_projection(popt, pool);
      OutputTarget{proj_out}.write(out, [&](std::ostream& o) {
        write_header(o, kProjectionColumns);
        write_rows(o, rows);
      });
    } else if (adapt->parsed()) {
      make_function(aopt.function);
      if (!algs.empty()) {
        aopt.algs.clear();
        for (const auto& a : algs) aopt.algs.push_back(parse_algorithm(a));
      }
      const auto rows = run_adaptive(aopt, pool);
      OutputTarget{adapt_out}.write(out, [&](std::ostream& o) { emit_results(o, rows); });
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ContractError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace ktrace::cli
