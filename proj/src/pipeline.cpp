#include "convexify/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "convexify/carleman.hpp"
#include "convexify/errors.hpp"
#include "convexify/field_io.hpp"

namespace convexify {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.what());
  }
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string fmt_real(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

Field coefficient_field(const Scene& scene, const GridSpec& grid) {
  Field c(grid, false);
  for (int j = 0; j < grid.n_h(); ++j)
    for (int s = 0; s < grid.n_h(); ++s)
      for (int m = 0; m < grid.n_z(); ++m) c(j, s, m) = scene.coefficient(grid.x(j), grid.y(s), grid.z(m));
  return c;
}

ReferenceTarget reference_target(const Scene& scene, const GridSpec& grid) {
  ReferenceTarget ref{"object_1", 1.0, {0.0, 0.0, 0.5 * (grid.d() - grid.xi())}};
  for (const auto& inc : scene.inclusions) {
    if (inc.contrast > ref.c_ref) {
      ref.c_ref = inc.contrast;
      ref.location = inc.center;
    }
  }
  return ref;
}

SynthOutputs synthesize(const RunConfig& cfg) {
  const GridSpec g = cfg.grid_spec();
  SynthOutputs out;
  out.dataset = stage("forward_sim", [&] {
    return synthesize_dataset(cfg.scene, g, cfg.delta, cfg.seed, cfg.forward, true);
  });
  out.exact_tail = stage("data_prep", [&] { return volumetric_v_q(*out.dataset.interior).tail(); });
  return out;
}

SynthOutputs cmd_synth(const RunConfig& cfg, const fs::path& out_dir) {
  spdlog::info("synth: {} inclusion(s), delta {}, seed {}", cfg.scene.inclusions.size(), cfg.delta,
               cfg.seed);
  SynthOutputs out = synthesize(cfg);
  ensure_dir(out_dir);
  {
    auto os = open_out(out_dir / files::kDataset);
    write_dataset(os, out.dataset.noisy);
  }
  {
    auto os = open_out(out_dir / files::kDatasetClean);
    write_dataset(os, out.dataset.clean);
  }
  write_field_file(out_dir / files::kExactTail, out.exact_tail, {{"quantity", "exact_tail"}});
  write_field_file(out_dir / files::kExactCoefficient, coefficient_field(cfg.scene, cfg.grid_spec()),
                   {{"quantity", "exact_coefficient"}});
  auto os = open_out(out_dir / files::kSynthSummary);
  os << "lateral_heuristic_defect " << format_double(out.dataset.lateral_heuristic_defect) << '\n'
     << "noisy_trace_norm " << format_double(trace_norm(out.dataset.noisy.g0)) << '\n'
     << "clean_trace_norm " << format_double(trace_norm(out.dataset.clean.g0)) << '\n'
     << "exact_tail_norm " << format_double(norm_H2h(out.exact_tail)) << '\n';
  spdlog::info("synth: lateral heuristic defect {:.3g}", out.dataset.lateral_heuristic_defect);
  return out;
}

InversionOutputs invert(const RunConfig& cfg, const MeasuredBoundaryData& data,
                        const fs::path& checkpoint_dir) {
  if (data.grid != cfg.grid_spec())
    throw StageError("data_prep", "dataset grid does not match the configured grid");
  InversionOutputs out;
  out.mu = stage("tail_solver", [&] { return cfg.effective_mu(); });
  out.lambda = stage("convexifier", [&] { return cfg.effective_lambda(); });

  out.prep = stage("data_prep", [&] {
    if (cfg.solver.tail_variant == TailVariant::Carleman) return prepare_data(data);
    // The Dirichlet variant builds Q without psi1.
    PreparedData p = prepare_data(data);
    BoundaryFunctions bf = p.bf;
    for (auto& v : bf.psi1.values()) v = 0.0;
    p.ext.Q = build_extensions(bf).Q;
    return p;
  });
  spdlog::info("data_prep: taper defect {:.3g}, tail ansatz gap {:.3g}", out.prep.ext.taper_defect,
               out.prep.bf.tail_ansatz_gap);

  out.tail = stage("tail_solver", [&] {
    TailOptions opts;
    opts.variant = cfg.solver.tail_variant;
    return minimize_tail(out.prep.ext.Q, out.mu, opts);
  });
  spdlog::info("tail_solver: mu {}, I_mu {:.3g} (at zero {:.3g})", out.mu, out.tail.residual,
               out.tail.residual_at_zero);

  out.state = stage("convexifier", [&] {
    InversionConfig ic = cfg.inversion();
    ic.checkpoint_dir = checkpoint_dir;
    if (checkpoint_dir.empty()) ic.checkpoint_every = 0;
    auto log_every = [](int n, const Field&) {
      if (n % 50 == 0) spdlog::debug("convexifier: iteration {}", n);
    };
    return gradient_projection(Field(out.prep.ext.F.grid(), true), ic, out.prep.ext.F, out.tail.V,
                               log_every);
  });
  spdlog::info("convexifier: {} iterations, J {:.3g}, converged {}", out.state.history.size() - 1,
               out.state.J, out.state.converged);

  out.result = stage("reconstructor", [&] {
    const int kn = cfg.solver.k_target;
    const Field v = recover_v(out.state.p, out.prep.ext.F, out.tail.V, kn);
    return recover_c(v, data.grid.k(kn), cfg.solver.recovery);
  });
  spdlog::info("reconstructor: c_comp {:.4f} at ({:.3f}, {:.3f}, {:.3f})", out.result.c_comp,
               out.result.location[0], out.result.location[1], out.result.location[2]);
  return out;
}

InversionOutputs cmd_invert(const RunConfig& cfg, const fs::path& dataset, const fs::path& out_dir) {
  MeasuredBoundaryData data = stage("data_prep", [&] {
    std::ifstream is(dataset, std::ios::binary);
    if (!is) throw IoError("cannot open dataset " + dataset.string());
    return read_dataset(is);
  });
  ensure_dir(out_dir);
  fs::path ckpt;
  if (cfg.solver.checkpoint_every > 0) {
    ckpt = out_dir / files::kCheckpoints;
    ensure_dir(ckpt);
  }
  InversionOutputs out = invert(cfg, data, ckpt);

  write_field_file(out_dir / files::kTail, out.tail.V, out.tail.metadata());
  {
    auto os = open_out(out_dir / files::kIterations);
    write_iteration_log(os, out.state);
  }
  write_field_file(out_dir / files::kMinimizer, out.state.p,
                   {{"quantity", "p_min"}, {"J", format_double(out.state.J)}});
  write_field_file(out_dir / files::kCoefficient, out.result.c,
                   {{"quantity", "coefficient"}, {"k", format_double(out.result.k)}});

  const ReferenceTarget ref = reference_target(cfg.scene, cfg.grid_spec());
  {
    auto t3 = open_out(out_dir / files::kTable3);
    auto t4 = open_out(out_dir / files::kTable4);
    report_tables(t3, t4, {out.result}, {ref});
  }
  auto os = open_out(out_dir / files::kResult);
  const auto& r = out.result;
  os << "c_comp " << format_double(r.c_comp) << '\n'
     << "location " << format_double(r.location[0]) << ' ' << format_double(r.location[1]) << ' '
     << format_double(r.location[2]) << '\n'
     << "location_index " << r.location_index[0] << ' ' << r.location_index[1] << ' '
     << r.location_index[2] << '\n'
     << "k " << format_double(r.k) << '\n'
     << "imag_norm " << format_double(r.imag_norm) << '\n'
     << "c_ref " << format_double(ref.c_ref) << '\n'
     << "ref_location " << format_double(ref.location[0]) << ' ' << format_double(ref.location[1])
     << ' ' << format_double(ref.location[2]) << '\n'
     << "eps_comp_percent " << format_double(eps_comp(r.c_comp, ref.c_ref)) << '\n'
     << "mu " << format_double(out.mu) << '\n'
     << "lambda " << format_double(out.lambda) << '\n'
     << "R " << format_double(out.state.R) << '\n'
     << "iterations " << out.state.history.size() - 1 << '\n'
     << "converged " << fmt_bool(out.state.converged) << '\n'
     << "J " << format_double(out.state.J) << '\n'
     << "halvings " << out.state.halvings << '\n'
     << "projection_active " << fmt_bool(out.state.projection_active) << '\n'
     << "tail_residual " << format_double(out.tail.residual) << '\n'
     << "tail_boundary_defect " << format_double(out.tail.boundary_defect) << '\n'
     << "taper_defect " << format_double(out.prep.ext.taper_defect) << '\n'
     << "tail_ansatz_gap " << format_double(out.prep.bf.tail_ansatz_gap) << '\n';
  return out;
}

ProbeInstance make_probe_instance(const RunConfig& cfg) {
  ProbeInstance inst;
  inst.cfg = cfg;
  RunConfig clean_cfg = cfg;
  clean_cfg.delta = 0.0;
  SynthOutputs s = synthesize(clean_cfg);
  inst.clean = s.dataset.clean;
  inst.exact_tail = std::move(s.exact_tail);
  inst.prep = stage("data_prep", [&] { return prepare_data(inst.clean); });
  inst.tail = stage("tail_solver", [&] { return minimize_tail(inst.prep.ext.Q, cfg.solver.mu); });
  return inst;
}

SuiteResult carleman_suite(const RunConfig& cfg, std::uint64_t seed, const fs::path& csv) {
  GridParams gp = cfg.grid;
  gp.n_h = 7;
  gp.n_z = 17;
  gp.n_k = 3;
  const GridSpec g(gp);
  Rng rng(seed);
  std::vector<Field> samples;
  for (int i = 0; i < 100; ++i) samples.push_back(random_admissible_field(g, rng));
  const CarlemanReport rep = verify_carleman(samples, {5.0, 10.0, 20.0});
  if (!csv.empty()) {
    auto os = open_out(csv);
    write_carleman_csv(os, rep);
  }
  SuiteResult r{"carleman", true, {}};
  double min5 = 0.0, min20 = 0.0;
  for (const auto& row : rep.rows) {
    r.details.push_back("lambda " + fmt_real(row.lambda) + ": min ratio " + fmt_real(row.min_ratio) +
                        ", lambda^3 h^2 " + fmt_real(row.lambda3_h2));
    if (!(row.min_ratio > 0.0)) r.passed = false;
    if (row.lambda == 5.0) min5 = row.min_ratio;
    if (row.lambda == 20.0) min20 = row.min_ratio;
  }
  if (!(min20 >= 0.5 * min5)) r.passed = false;
  r.details.push_back("min(20) / min(5) = " + fmt_real(min20 / min5) + " (needs >= 0.5)");
  r.details.push_back("lambda0 = " + fmt_real(rep.lambda0));
  return r;
}

SuiteResult convexity_suite(const ProbeInstance& inst, std::uint64_t seed) {
  const double lambda = inst.cfg.solver.lambda;
  const InversionConfig ic = inst.cfg.inversion();
  const double R = effective_radius(ic, inst.prep.ext.F);
  const Functional J(inst.prep.ext.F, inst.tail.V, lambda, inst.cfg.solver.form);
  const Functional J0(inst.prep.ext.F, inst.tail.V, 0.0, inst.cfg.solver.form);
  const ConvexityReport a = convexity_probe(J, R, 50, seed);
  const ConvexityReport b = convexity_probe(J0, R, 50, seed);
  SuiteResult r{"convexity", a.min_ratio > 0.0 && a.min_ratio > b.min_ratio, {}};
  r.details.push_back("R = " + fmt_real(R));
  r.details.push_back("lambda " + fmt_real(lambda) + ": min ratio " + fmt_real(a.min_ratio) +
                      ", max " + fmt_real(a.max_ratio));
  r.details.push_back("lambda 0: min ratio " + fmt_real(b.min_ratio) + ", max " + fmt_real(b.max_ratio));
  return r;
}

SuiteResult gradient_suite(const ProbeInstance& inst, std::uint64_t seed) {
  const Functional J(inst.prep.ext.F, inst.tail.V, inst.cfg.solver.lambda, inst.cfg.solver.form);
  const double R = effective_radius(inst.cfg.inversion(), inst.prep.ext.F);
  Rng rng(seed);
  const Field p = random_direction(J.grid(), rng, 0.1 * R);
  const GradientCheckReport gc = gradient_check(J, p, 20, seed + 1);
  const LipschitzReport lp = lipschitz_probe(J, R, 50, seed + 2);
  // Bounded: finite and within two decades of the typical pair.
  const bool bounded = std::isfinite(lp.max_ratio) && lp.max_ratio <= 100.0 * lp.median_ratio;
  SuiteResult r{"gradient", gc.max_relative_error <= 1e-6 && bounded, {}};
  r.details.push_back("max relative error over " + std::to_string(gc.directions) +
                      " directions: " + fmt_real(gc.max_relative_error) + " (needs <= 1e-6)");
  r.details.push_back("Lipschitz ratio over " + std::to_string(lp.pairs) + " pairs: min " +
                      fmt_real(lp.min_ratio) + ", median " + fmt_real(lp.median_ratio) + ", max " +
                      fmt_real(lp.max_ratio));
  return r;
}

SuiteResult tail_suite(const ProbeInstance& inst, std::uint64_t seed) {
  const TailProbeReport rep =
      tail_convergence_probe(inst.clean, inst.exact_tail, {1e-2, 1e-3, 1e-4}, seed, inst.cfg.solver.lambda0);
  SuiteResult r{"tail", rep.slope >= 0.35, {}};
  for (const auto& row : rep.rows)
    r.details.push_back("delta " + fmt_real(row.delta) + ": mu " + fmt_real(row.mu) +
                        ", noise error " + fmt_real(row.noise_error) + ", floor " +
                        fmt_real(row.floor_error) + ", total " + fmt_real(row.total_error));
  r.details.push_back("log-log slope " + fmt_real(rep.slope) + " (needs >= 0.35)");
  r.details.push_back("floor at zero noise " + fmt_real(rep.floor_at_zero_noise) + ", ||V*|| " +
                      fmt_real(rep.exact_tail_norm));
  return r;
}

SuiteResult convergence_suite(const ProbeInstance& inst, std::uint64_t seed) {
  const InversionConfig ic = inst.cfg.inversion();
  const Field& F = inst.prep.ext.F;
  const Field& V = inst.tail.V;
  const Field zero(F.grid(), true);
  const IterateState a = gradient_projection(zero, ic, F, V);
  const int N = static_cast<int>(a.history.size()) - 1;

  // Replay the deterministic run to measure distances to the final iterate.
  std::vector<double> dist(N + 1, 0.0);
  dist[0] = norm_H2h_k(zero - a.p);
  gradient_projection(zero, ic, F, V, [&](int n, const Field& p) { dist[n] = norm_H2h_k(p - a.p); });

  bool monotone = true;
  for (int n = std::max(1, ic.burn_in + 1); n <= N; ++n)
    if (a.history[n].J > a.history[n - 1].J) monotone = false;

  double theta = 0.0;
  for (int n = (2 * N) / 3; n + 1 < N; ++n)
    if (dist[n] > 0.0) theta = std::max(theta, dist[n + 1] / dist[n]);

  Rng rng(seed);
  const Field start = random_direction(F.grid(), rng, 0.1 * a.R);
  const IterateState b = gradient_projection(start, ic, F, V);
  const double gap = norm_H2h_k(a.p - b.p);

  SuiteResult r{"convergence", false, {}};
  r.passed = a.converged && b.converged && monotone && N >= 3 && theta <= 0.99 &&
             gap <= 10.0 * ic.grad_tol;
  r.details.push_back("start 0: " + std::to_string(N) + " iterations, converged " +
                      fmt_bool(a.converged) + ", halvings " + std::to_string(a.halvings) +
                      ", J " + fmt_real(a.J));
  r.details.push_back("J nonincreasing after burn-in: " + fmt_bool(monotone));
  r.details.push_back("contraction ratio over the last third: " + fmt_real(theta) + " (needs <= 0.99)");
  r.details.push_back("random start: " + std::to_string(b.history.size() - 1) + " iterations, converged " +
                      fmt_bool(b.converged));
  r.details.push_back("two-start distance " + fmt_real(gap) + " (needs <= " +
                      fmt_real(10.0 * ic.grad_tol) + ")");
  r.details.push_back("projection active: " + fmt_bool(a.projection_active || b.projection_active));
  return r;
}

std::vector<SuiteResult> cmd_verify(const RunConfig& cfg, const fs::path& out_dir) {
  ensure_dir(out_dir);
  std::vector<SuiteResult> results;
  const std::uint64_t seed = cfg.seed;
  results.push_back(carleman_suite(cfg, seed, out_dir / files::kCarlemanCsv));
  spdlog::info("verify: carleman {}", results.back().passed ? "pass" : "FAIL");
  const ProbeInstance inst = make_probe_instance(cfg);
  results.push_back(convexity_suite(inst, seed + 10));
  spdlog::info("verify: convexity {}", results.back().passed ? "pass" : "FAIL");
  results.push_back(gradient_suite(inst, seed + 20));
  spdlog::info("verify: gradient {}", results.back().passed ? "pass" : "FAIL");
  results.push_back(tail_suite(inst, seed + 30));
  spdlog::info("verify: tail {}", results.back().passed ? "pass" : "FAIL");
  results.push_back(convergence_suite(inst, seed + 40));
  spdlog::info("verify: convergence {}", results.back().passed ? "pass" : "FAIL");

  auto os = open_out(out_dir / files::kVerify);
  for (const auto& r : results) {
    os << r.name << ' ' << (r.passed ? "PASS" : "FAIL") << '\n';
    for (const auto& d : r.details) os << "  " << d << '\n';
  }
  return results;
}

std::string cmd_report(const fs::path& out_dir) {
  std::ifstream rs(out_dir / files::kResult);
  if (!rs) throw IoError("no " + std::string(files::kResult) + " in " + out_dir.string());
  std::vector<std::pair<std::string, std::string>> kv;
  for (std::string line; std::getline(rs, line);) {
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    kv.emplace_back(line.substr(0, sp), sp == std::string::npos ? "" : line.substr(sp + 1));
  }

  std::ostringstream md;
  md << "# Reconstruction report\n\n| quantity | value |\n|---|---|\n";
  for (const auto& [k, v] : kv) md << "| " << k << " | " << v << " |\n";

  std::ifstream it(out_dir / files::kIterations);
  if (it) {
    std::vector<std::string> rows;
    std::string header;
    std::getline(it, header);
    for (std::string line; std::getline(it, line);)
      if (!line.empty()) rows.push_back(line);
    md << "\n## Iterations\n\n" << rows.size() << " logged iterates (" << header << ")\n\n```\n";
    const std::size_t stride = std::max<std::size_t>(1, rows.size() / 10);
    for (std::size_t i = 0; i < rows.size(); i += stride) md << rows[i] << '\n';
    if (!rows.empty() && (rows.size() - 1) % stride != 0) md << rows.back() << '\n';
    md << "```\n";
  }
  for (const char* table : {files::kTable3, files::kTable4}) {
    std::ifstream ts(out_dir / table);
    if (!ts) continue;
    md << "\n## " << table << "\n\n```\n" << ts.rdbuf() << "```\n";
  }
  const std::string text = md.str();
  auto os = open_out(out_dir / files::kReport);
  os << text;
  return text;
}

}  // namespace convexify
