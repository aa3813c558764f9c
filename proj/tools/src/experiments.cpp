#include "ktrace_cli/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/QR>

#include "ktrace/errors.hpp"
#include "ktrace_cli/problem.hpp"

namespace ktrace::cli {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::optional<double> relative_error(double estimate, std::optional<double> exact) {
  if (!exact || *exact == 0.0) return std::nullopt;
  return std::abs(estimate - *exact) / std::abs(*exact);
}

void fill_counts(ResultRow& row, const TraceEstimate& est) {
  row.matvecs = static_cast<double>(est.matvecs);
  row.deflation_matvecs = static_cast<double>(est.deflation_matvecs);
  row.sampling_matvecs = static_cast<double>(est.sampling_matvecs);
  row.deflation_rank = static_cast<double>(est.deflation_rank);
  row.samples = static_cast<double>(est.samples);
  row.remainder_path = std::string(est.remainder_path);
}

std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string text_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

Eigen::Index parse_index(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw UsageError("bad integer for " + key + ": '" + v + "'");
  return static_cast<Eigen::Index>(out);
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw UsageError("bad number for " + key + ": '" + v + "'");
  return out;
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& x) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-12);
  const Eigen::Index rank = qr.rank();
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), rank);
  return q;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string format_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

void write_header(std::ostream& out, std::span<const std::string_view> columns) {
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
}

void write_rows(std::ostream& out, std::span<const ResultRow> rows) {
  for (const ResultRow& r : rows) {
    out << text_field(r.experiment) << ',' << text_field(r.config) << ',' << r.trial << ',' << cell(r.beta) << ',' << cell(r.target) << ','
        << cell(r.estimate) << ',' << cell(r.exact) << ',' << cell(r.rel_error) << ',' << format_number(r.matvecs) << ','
        << format_number(r.deflation_matvecs) << ',' << format_number(r.sampling_matvecs) << ','
        << format_number(r.deflation_rank) << ',' << format_number(r.samples) << ',' << r.remainder_path << ','
        << format_number(r.wall_ms) << '\n';
  }
}

void write_rows(std::ostream& out, std::span<const ProjectionRow> rows) {
  for (const ProjectionRow& r : rows) {
    out << "projection," << r.spectrum << ',' << r.q << ',' << r.b << ',' << r.r << ',' << format_number(r.krylov_residual)
        << ',' << format_number(r.naive_residual) << ',' << r.deflation_rank << ',' << format_number(r.wall_ms) << '\n';
  }
}

// ---------------------------------------------------------------------------

RunSpec parse_run(const std::string& text) {
  RunSpec run;
  run.text = text;
  const auto colon = text.find(':');
  const std::string alg = text.substr(0, colon);
  if (alg == "girard") {
    run.alg = Algorithm::krylov;
  } else {
    try {
      run.alg = parse_algorithm(alg);
    } catch (const ContractError&) {
      throw UsageError("unknown algorithm '" + alg + "' (krylov, girard, hutchpp, restart, ada, ahutchpp)");
    }
  }
  if (colon != std::string::npos) {
    std::stringstream in(text.substr(colon + 1));
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw UsageError("expected key=value in run spec, got '" + item + "'");
      const std::string key = item.substr(0, eq);
      const std::string value = item.substr(eq + 1);
      EstimatorConfig& c = run.cfg;
      if (key == "b") c.b = parse_index(key, value);
      else if (key == "q") c.q = parse_index(key, value);
      else if (key == "m") c.m = parse_index(key, value);
      else if (key == "n") c.n = parse_index(key, value);
      else if (key == "r") c.r = parse_index(key, value);
      else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_index(key, value));
      else if (key == "eps") c.eps = parse_real(key, value);
      else if (key == "delta") c.delta = parse_real(key, value);
      else if (key == "qmax") c.q_max = parse_index(key, value);
      else if (key == "filter_beta") run.filter_beta = parse_real(key, value);
      else if (key == "dist") {
        if (value == "gaussian") c.dist = Distribution::gaussian;
        else if (value == "rademacher") c.dist = Distribution::rademacher;
        else throw UsageError("dist must be gaussian or rademacher");
      } else {
        throw UsageError("unknown run key '" + key + "'");
      }
    }
  }
  if (alg == "girard") {
    run.cfg.b = 0;
    run.cfg.q = 0;
  }
  try {
    run.cfg.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  return run;
}

TraceEstimate run_estimator(const MatrixOracle& a, std::span<const SpectralFunction> fs, const RunSpec& run) {
  switch (run.alg) {
    case Algorithm::krylov:
      return krylov_trace(a, fs, run.cfg);
    case Algorithm::restart:
      return restart_trace(a, fs, run.cfg, exp_filter_provider(run.filter_beta));
    case Algorithm::hutchpp:
    case Algorithm::ada:
    case Algorithm::ahutchpp:
      break;
  }
  if (fs.size() != 1) throw UsageError(std::string(to_string(run.alg)) + " takes exactly one function");
  if (run.alg == Algorithm::hutchpp) return hutchpp_baseline(a, fs[0], run.cfg);
  if (run.alg == Algorithm::ada) return ada_trace(a, fs[0], run.cfg);
  return ahutchpp(a, fs[0], run.cfg);
}

int worker_count() {
  if (const char* env = std::getenv("KTRACE_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<std::vector<ResultRow>> for_each_index(int count, int workers,
                                                   const std::function<std::vector<ResultRow>(int)>& job) {
  std::vector<std::vector<ResultRow>> out(static_cast<std::size_t>(std::max(count, 0)));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        out[static_cast<std::size_t>(i)] = job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  const int threads = std::min(std::max(workers, 1), std::max(count, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<ResultRow> run_trace(const TraceOptions& opt, int workers) {
  // Synthetic spectra are defined through f; the shift needs the spectrum first.
  const SpectralFunction base = make_function(opt.function, opt.beta);
  const Problem problem = parse_problem(opt.problem, base);
  const SpectralFunction f = make_function(opt.function, opt.beta, opt.shift_min ? problem.lambda_min() : 0.0);
  const std::optional<double> exact = problem.exact_trace(f);
  const std::span<const SpectralFunction> fs(&f, 1);

  auto rows = for_each_index(opt.trials, workers, [&](int trial) {
    const auto op = problem.make();
    RunSpec run = opt.run;
    run.cfg.seed += static_cast<std::uint64_t>(trial);
    const auto start = Clock::now();
    const TraceEstimate est = run_estimator(*op, fs, run);
    ResultRow row;
    row.wall_ms = elapsed_ms(start);
    row.experiment = "trace";
    row.config = run.text;
    row.trial = std::to_string(trial);
    if (opt.function == "exp") row.beta = opt.beta;
    if (run.alg == Algorithm::ada || run.alg == Algorithm::ahutchpp) row.target = est.eps_used;
    row.estimate = est.total();
    row.exact = exact;
    row.rel_error = relative_error(est.total(), exact);
    row.t_defl = est.t_defl();
    row.t_rem = est.t_rem();
    fill_counts(row, est);
    return std::vector<ResultRow>{row};
  });
  std::vector<ResultRow> flat;
  for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return flat;
}

std::vector<std::string> default_spin_runs() {
  return {"krylov:b=8,q=30,m=0,n=50", "girard:m=13,n=50", "krylov:b=4,q=30,m=6,n=50"};
}

std::vector<ResultRow> run_spin(const SpinOptions& opt, int workers) {
  if (opt.trials < 1) throw UsageError("trials must be >= 1");
  if (opt.betas.empty()) throw UsageError("empty beta grid");
  std::ostringstream spec;
  spec << "spin:N=" << opt.spins << ",h=" << format_number(opt.field);
  if (opt.spins > 12) throw CapacityError("spin experiment needs exact traces; N <= 12");
  const Problem problem = parse_problem(spec.str(), SpectralFunction::constant(1.0));
  const double shift = problem.lambda_min();
  std::vector<SpectralFunction> fs;
  std::vector<double> exact;
  for (double beta : opt.betas) {
    fs.push_back(SpectralFunction::exp_neg_beta(beta, shift));
    exact.push_back(*problem.exact_trace(fs.back()));
  }

  const int runs = static_cast<int>(opt.runs.size());
  auto blocks = for_each_index(opt.trials * runs, workers, [&](int job) {
    const int trial = job / runs;
    const RunSpec& base = opt.runs[static_cast<std::size_t>(job % runs)];
    const auto op = problem.make();
    RunSpec run = base;
    run.cfg.seed = opt.seed + static_cast<std::uint64_t>(trial);
    const auto start = Clock::now();
    const TraceEstimate est = run_estimator(*op, fs, run);
    const double ms = elapsed_ms(start);
    std::vector<ResultRow> out;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      ResultRow row;
      row.experiment = "spin";
      row.config = run.text;
      row.trial = std::to_string(trial);
      row.beta = opt.betas[i];
      row.estimate = est.values[i].total;
      row.exact = exact[i];
      row.rel_error = relative_error(est.values[i].total, exact[i]);
      fill_counts(row, est);
      row.wall_ms = ms;
      out.push_back(std::move(row));
    }
    return out;
  });

  std::vector<ResultRow> rows;
  for (auto& b : blocks) rows.insert(rows.end(), b.begin(), b.end());

  for (int ri = 0; ri < runs; ++ri) {
    for (std::size_t i = 0; i < fs.size(); ++i) {
      std::vector<double> errors;
      std::vector<double> matvecs;
      double ms = 0.0;
      for (int trial = 0; trial < opt.trials; ++trial) {
        const ResultRow& r = rows[(static_cast<std::size_t>(trial * runs + ri)) * fs.size() + i];
        errors.push_back(r.rel_error.value_or(0.0));
        matvecs.push_back(r.matvecs);
        ms += r.wall_ms;
      }
      ResultRow s = rows[static_cast<std::size_t>(ri) * fs.size() + i];
      s.trial = "p90";
      s.estimate.reset();
      s.rel_error = percentile(errors, 90.0);
      s.matvecs = mean(matvecs);
      s.wall_ms = ms / opt.trials;
      rows.push_back(std::move(s));
    }
  }
  return rows;
}

std::vector<ProjectionRow> run_projection(const ProjectionOptions& opt, int workers) {
  if (opt.spectrum != "slow" && opt.spectrum != "fast") throw UsageError("spectrum must be slow or fast");
  const SpectralFunction f = make_function(opt.function);
  const SyntheticSpectrum spec = build_synthetic_spectrum(opt.spectrum == "slow" ? SpectrumKind::slow : SpectrumKind::fast,
                                                          opt.d, opt.kappa, opt.rho, f);
  const Eigen::MatrixXd fa = Eigen::MatrixXd(spec.f_values.asDiagonal());

  struct Cell {
    Eigen::Index q, b, r;
  };
  std::vector<Cell> cells;
  for (Eigen::Index r : opt.rs)
    for (Eigen::Index b : opt.bs)
      for (Eigen::Index q : opt.qs)
        if (q * b <= opt.max_qb) cells.push_back({q, b, r});

  std::vector<ProjectionRow> out(cells.size());
  for_each_index(static_cast<int>(cells.size()), workers, [&](int i) {
    const Cell c = cells[static_cast<std::size_t>(i)];
    if (c.q < 1 || c.b < 1 || c.r < 0) throw UsageError("projection cells need q >= 1, b >= 1, r >= 0");
    if (c.b > opt.d) throw UsageError("block size exceeds d");
    const auto start = Clock::now();
    Eigen::MatrixXd omega = sketch_stream(opt.seed).block(opt.d, c.b);
    for (Eigen::Index k = 0; k < c.r; ++k) {
      const LanczosResult cycle = block_lanczos(spec.op, omega, c.q, 0);
      omega = apply_filter(cycle.t, cycle.basis, exp_filter(cycle.t, c.q, opt.filter_beta, static_cast<int>(c.q)), c.q);
    }
    const LanczosResult res = block_lanczos(spec.op, omega, c.q, 1);
    ProjectionRow row;
    row.spectrum = opt.spectrum;
    row.q = c.q;
    row.b = c.b;
    row.r = c.r;
    row.krylov_residual = projection_residual(fa, res.basis.columns);
    row.naive_residual = projection_residual(fa, orthonormal_columns(lanczos_apply(res.t, res.basis, f, c.q + 1)));
    row.deflation_rank = res.basis.columns.cols() - static_cast<Eigen::Index>(res.t.inactive.size());
    row.wall_ms = elapsed_ms(start);
    out[static_cast<std::size_t>(i)] = row;
    return std::vector<ResultRow>{};
  });
  return out;
}

std::vector<ResultRow> run_adaptive(const AdaptiveOptions& opt, int workers) {
  if (opt.trials < 1) throw UsageError("trials must be >= 1");
  if (opt.p_min > opt.p_max) throw UsageError("p range is empty");
  const SpectralFunction f = make_function(opt.function);
  const Problem problem = parse_problem(opt.problem, f);
  const std::optional<double> exact = problem.exact_trace(f);
  if (opt.exact_eps && !exact) throw UsageError("exact eps needs a problem with a known spectrum");

  struct Job {
    Algorithm alg;
    int p;
    int trial;
  };
  std::vector<Job> jobs;
  for (Algorithm alg : opt.algs)
    for (int p = opt.p_min; p <= opt.p_max; ++p)
      for (int t = 0; t < opt.trials; ++t) jobs.push_back({alg, p, t});

  auto config_text = [&](Algorithm alg, int p) {
    std::ostringstream s;
    s << to_string(alg) << ":b=" << opt.b << ",n=" << opt.n << ",p=" << p << ",delta=" << format_number(opt.delta);
    return s.str();
  };

  auto blocks = for_each_index(static_cast<int>(jobs.size()), workers, [&](int i) {
    const Job job = jobs[static_cast<std::size_t>(i)];
    const auto op = problem.make();
    EstimatorConfig cfg;
    cfg.b = opt.b;
    cfg.n = opt.n;
    cfg.delta = opt.delta;
    cfg.q_max = opt.q_max;
    cfg.seed = opt.seed + static_cast<std::uint64_t>(job.trial);
    const double rel = std::ldexp(1.0, -job.p);
    if (opt.exact_eps) {
      cfg.eps = rel * std::abs(*exact);
    } else {
      cfg.eps = rel;
      cfg.relative_eps = true;
    }
    const auto start = Clock::now();
    const TraceEstimate est = job.alg == Algorithm::ada ? ada_trace(*op, f, cfg) : ahutchpp(*op, f, cfg);
    ResultRow row;
    row.wall_ms = elapsed_ms(start);
    row.experiment = "adaptive";
    row.config = config_text(job.alg, job.p);
    row.trial = std::to_string(job.trial);
    row.target = est.eps_used;
    row.estimate = est.total();
    row.exact = exact;
    row.rel_error = relative_error(est.total(), exact);
    fill_counts(row, est);
    return std::vector<ResultRow>{row};
  });

  std::vector<ResultRow> rows;
  for (auto& b : blocks) rows.insert(rows.end(), b.begin(), b.end());

  const std::size_t per = static_cast<std::size_t>(opt.trials);
  const std::size_t groups = rows.size() / per;
  for (std::size_t g = 0; g < groups; ++g) {
    ResultRow s = rows[g * per];
    s.trial = "mean";
    std::vector<double> cols[8];
    double ms = 0.0;
    for (std::size_t t = 0; t < per; ++t) {
      const ResultRow& r = rows[g * per + t];
      cols[0].push_back(r.target.value_or(0.0));
      cols[1].push_back(r.estimate.value_or(0.0));
      cols[2].push_back(r.rel_error.value_or(0.0));
      cols[3].push_back(r.matvecs);
      cols[4].push_back(r.deflation_matvecs);
      cols[5].push_back(r.sampling_matvecs);
      cols[6].push_back(r.deflation_rank);
      cols[7].push_back(r.samples);
      ms += r.wall_ms;
    }
    s.target = mean(cols[0]);
    s.estimate = mean(cols[1]);
    if (exact) s.rel_error = mean(cols[2]);
    s.matvecs = mean(cols[3]);
    s.deflation_matvecs = mean(cols[4]);
    s.sampling_matvecs = mean(cols[5]);
    s.deflation_rank = mean(cols[6]);
    s.samples = mean(cols[7]);
    s.wall_ms = ms / static_cast<double>(per);
    rows.push_back(std::move(s));
  }
  return rows;
}

}  // namespace ktrace::cli
