// Command-line front end: run / resume / analyze experiment directories,
// scan eigenstate complexity, and run the dense-oracle self checks.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ergosim/dense_reference.hpp"
#include "ergosim/eigenstates.hpp"
#include "ergosim/runner.hpp"
#include "ergosim/version.hpp"

namespace {

using namespace ergosim;

void print_run_summary(const RunResult& result) {
  std::printf("run: model=%s N=%d ensemble=%d -> %s\n",
              to_string(result.config.model), result.config.num_qubits,
              result.config.ensemble_size, result.config.output_dir.c_str());
  for (const auto& [key, ref] : result.references)
    std::printf("  reference %-8s = %.6f\n", key.c_str(), ref);
  for (const auto& f : result.fits)
    std::printf("  fit %-5s k=%d %-11s amp=%.4g rate=%.4g (+-%.2g) window=[%g,%g] "
                "resid=%.3g\n",
                f.quantity.c_str(), f.k, to_string(f.fit.model), f.fit.amplitude,
                f.fit.rate_or_exponent, f.fit.rate_std_error, f.fit.window_lo,
                f.fit.window_hi, f.fit.residual_rms);
  for (const auto& s : result.sats)
    std::printf("  t_sat %-5s k=%d eps=%g -> %s\n", s.quantity.c_str(), s.k,
                s.sat.epsilon,
                s.sat.defined ? std::to_string(s.sat.t_sat).c_str() : "undefined");
  for (const auto& e : result.fit_errors)
    std::printf("  [fit skipped] %s\n", e.c_str());
}

int run_oracle_checks() {
  int failures = 0;
  const auto report = [&](const char* name, bool ok, double value) {
    std::printf("[%s] %-52s %.3e\n", ok ? "PASS" : "FAIL", name, value);
    if (!ok) ++failures;
  };

  {  // Fast Pauli-spectrum transform vs dense brute force, N = 2..4.
    double worst = 0.0;
    for (int n = 2; n <= 4; ++n) {
      Rng rng = make_rng(11 + static_cast<std::uint64_t>(n));
      for (int rep = 0; rep < 5; ++rep) {
        const StateVector psi = haar_random_state(n, rng);
        const auto fast = pauli_spectrum_summary(psi, {1, 2, 3});
        const auto brute = dense::brute_force_pauli_moments(psi);
        for (int k : {1, 2, 3})
          worst = std::max(worst, std::abs(fast.moment_sums.at(k) -
                                           brute.moment_sums.at(k)));
        worst = std::max(worst, std::abs(fast.shannon_term - brute.shannon_term));
      }
    }
    report("pauli spectrum: fast transform vs dense brute force", worst < 1e-10,
           worst);
  }
  {  // KIM fast-Hadamard step vs dense operator product, N = 6.
    Rng rng = make_rng(5);
    const auto params = IsingParams::defaults(6);
    StateVector psi = random_product_state(6, rng);
    const KimTables tables(params);
    double worst = 0.0;
    StateVector dense_psi = psi;
    for (int t = 0; t < 10; ++t) {
      dense_psi = dense::dense_kim_step(dense_psi, params);
      kim_step(psi, tables);
    }
    for (std::uint64_t x = 0; x < psi.dim(); ++x)
      worst = std::max(worst, std::abs(psi.data()[x] - dense_psi.data()[x]));
    report("kim step: fast-Hadamard vs dense operator product", worst < 1e-10,
           worst);
  }
  {  // Chebyshev evolution vs dense matrix exponential, N = 8.
    Rng rng = make_rng(7);
    const auto params = IsingParams::defaults(8);
    const MfimAction h(params);
    const auto bounds = lanczos_bounds(h, 8);
    const dense::DenseEvolver exact(dense_hamiltonian(params));
    StateVector psi = random_product_state(8, rng);
    StateVector cheb = psi;
    chebyshev_evolve(cheb, h, bounds, 10.0);
    const StateVector ref = exact.evolve(psi, 10.0);
    const double infid = 1.0 - std::abs(inner_product(ref, cheb));
    report("chebyshev evolution vs dense matrix exponential", infid < 1e-10,
           infid);
  }
  {  // Lanczos bracket vs dense extremal eigenvalues, N = 8.
    const auto params = IsingParams::defaults(8, 0.3);
    auto p = params;
    Rng rng = make_rng(13);
    p.apply_disorder(rng);
    const MfimAction h(p);
    const auto bounds = lanczos_bounds(h, 8);
    const dense::DenseEvolver exact(dense_hamiltonian(p));
    const bool ok = bounds.e_min <= exact.e_min() && exact.e_max() <= bounds.e_max;
    report("lanczos bounds bracket the dense spectrum", ok,
           std::min(exact.e_min() - bounds.e_min, bounds.e_max - exact.e_max()));
  }
  {  // Half-cut entanglement vs explicit reduced density matrix, N = 6.
    Rng rng = make_rng(17);
    StateVector psi = haar_random_state(6, rng);
    const double fast = renyi2_entanglement_halfcut(psi);
    const double slow = -std::log2(dense::reduced_density_purity(psi, 3));
    report("half-cut renyi-2 vs dense partial trace", std::abs(fast - slow) < 1e-12,
           std::abs(fast - slow));
  }
  std::printf(failures ? "oracle-check: %d FAILURE(S)\n" : "oracle-check: all passed\n",
              failures);
  return failures ? 1 : 0;
}

int run_eigenstate_scan(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file: " + config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const int n = j.at("num_qubits").get<int>();
  const double w = j.value("disorder_width", 0.0);
  const std::uint64_t seed = j.value("master_seed", std::uint64_t{1});
  const std::string out_path = j.value("output", std::string("spectrum_scan.csv"));

  IsingParams params = IsingParams::defaults(n, w);
  if (w > 0.0) {
    Rng rng = make_rng(derive_seed(seed, 0, StreamRole::disorder));
    params.apply_disorder(rng);
  }
  const SpectrumScan scan = eigenstate_complexity_scan(params);
  const double e_min = scan.energies.front();
  const double e_max = scan.energies.back();
  std::ofstream out(out_path);
  out << "index,energy,energy_density,pe_k2,se_k2\n";
  char buf[160];
  for (std::size_t i = 0; i < scan.energies.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", i,
                  scan.energies[i],
                  (scan.energies[i] - e_min) / (e_max - e_min),
                  scan.per_state_pe[i], scan.per_state_se[i]);
    out << buf;
  }
  if (!out) throw std::runtime_error("cannot write " + out_path);
  std::printf("scan: N=%d states=%zu -> %s\n", n, scan.energies.size(),
              out_path.c_str());
  std::printf("  gap ratio (raw spectrum) r = %.4f\n",
              gap_ratio_statistic(scan.energies));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ergosim: complexity spreading in ergodic qubit chains"};
  app.set_version_flag("--version", ergosim::kVersion);
  app.require_subcommand(1);

  std::string config_path, run_dir;
  std::vector<double> epsilons;
  int workers = 0;
  std::optional<int> override_n, override_ensemble;
  std::optional<std::uint64_t> override_seed;
  std::optional<std::string> override_out;

  auto* cmd_run = app.add_subcommand("run", "run an experiment from a config file");
  cmd_run->add_option("config", config_path, "JSON experiment config")->required();
  cmd_run->add_option("--workers", workers, "worker threads (0 = auto)");
  cmd_run->add_option("--num-qubits", override_n, "override num_qubits");
  cmd_run->add_option("--ensemble", override_ensemble, "override ensemble_size");
  cmd_run->add_option("--seed", override_seed, "override master_seed");
  cmd_run->add_option("--output", override_out, "override output_dir");

  auto* cmd_resume = app.add_subcommand("resume", "resume an interrupted run");
  cmd_resume->add_option("dir", run_dir, "run directory")->required();
  cmd_resume->add_option("--workers", workers, "worker threads (0 = auto)");

  auto* cmd_analyze =
      app.add_subcommand("analyze", "re-run analysis of a run directory");
  cmd_analyze->add_option("dir", run_dir, "run directory")->required();
  cmd_analyze->add_option("--epsilon", epsilons, "override saturation thresholds");

  auto* cmd_scan = app.add_subcommand("scan-eigenstates",
                                      "dense eigenstate PE/SE scan (small N)");
  cmd_scan->add_option("config", config_path, "JSON scan config")->required();

  auto* cmd_oracle =
      app.add_subcommand("oracle-check", "run the dense-oracle self checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(cmd_run)) {
      ExperimentConfig cfg = load_config_file(config_path);
      if (workers > 0) cfg.workers = workers;
      if (override_n) cfg.num_qubits = *override_n;
      if (override_ensemble) cfg.ensemble_size = *override_ensemble;
      if (override_seed) cfg.master_seed = *override_seed;
      if (override_out) cfg.output_dir = *override_out;
      print_run_summary(run_experiment(cfg));
      return 0;
    }
    if (app.got_subcommand(cmd_resume)) {
      std::ifstream in(std::filesystem::path(run_dir) / "config.json");
      if (!in) throw CheckpointError("no config.json in " + run_dir);
      json stored;
      in >> stored;
      ExperimentConfig cfg = config_from_json(stored);
      cfg.output_dir = run_dir;
      if (workers > 0) cfg.workers = workers;
      print_run_summary(run_experiment(cfg));
      return 0;
    }
    if (app.got_subcommand(cmd_analyze)) {
      print_run_summary(analyze_directory(run_dir, epsilons));
      return 0;
    }
    if (app.got_subcommand(cmd_scan)) return run_eigenstate_scan(config_path);
    if (app.got_subcommand(cmd_oracle)) return run_oracle_checks();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ResourceError& e) {
    std::fprintf(stderr, "resource error: %s\n", e.what());
    return 3;
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
