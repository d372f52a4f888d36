#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <omp.h>

#include "json.hpp"

#include "ergosim/analysis.hpp"
#include "ergosim/chebyshev.hpp"
#include "ergosim/circuits.hpp"
#include "ergosim/complexity.hpp"
#include "ergosim/floquet_family.hpp"
#include "ergosim/initial_states.hpp"
#include "ergosim/models.hpp"
#include "ergosim/rng.hpp"
#include "ergosim/state_vector.hpp"
#include "ergosim/version.hpp"

namespace ergosim {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ModelKind { kim, mfim, floquet_family, circuit_haar, circuit_u1 };

inline const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::kim: return "kim";
    case ModelKind::mfim: return "mfim";
    case ModelKind::floquet_family: return "floquet_family";
    case ModelKind::circuit_haar: return "circuit_haar";
    case ModelKind::circuit_u1: return "circuit_u1";
  }
  return "?";
}

inline ModelKind model_from_string(const std::string& s) {
  if (s == "kim") return ModelKind::kim;
  if (s == "mfim") return ModelKind::mfim;
  if (s == "floquet_family") return ModelKind::floquet_family;
  if (s == "circuit_haar") return ModelKind::circuit_haar;
  if (s == "circuit_u1") return ModelKind::circuit_u1;
  throw ConfigError("unknown model: " + s);
}

/// Observation time grid. "linear" samples 0, step, 2 step, ..., t_max.
/// "hybrid" is dense (unit `step`) up to dense_until, then `log_points`
/// geometrically spaced times up to t_max, snapped to the step so Floquet /
/// circuit times stay integers.
struct TimeGridSpec {
  enum class Kind { linear, hybrid };
  Kind kind = Kind::linear;
  double step = 1.0;
  double t_max = 0.0;
  double dense_until = 0.0;
  int log_points = 0;

  std::vector<double> times() const {
    if (step <= 0.0) throw ConfigError("time_grid: step must be > 0");
    if (t_max < 0.0) throw ConfigError("time_grid: t_max must be >= 0");
    std::vector<double> ts;
    const double dense_max = kind == Kind::linear ? t_max : dense_until;
    const auto dense_count = static_cast<std::int64_t>(std::floor(dense_max / step + 1e-9));
    for (std::int64_t i = 0; i <= dense_count; ++i) ts.push_back(static_cast<double>(i) * step);
    if (kind == Kind::hybrid) {
      if (dense_until > t_max) throw ConfigError("time_grid: dense_until > t_max");
      const double lo = std::max(dense_until, step);
      for (int i = 1; i <= log_points; ++i) {
        const double raw = lo * std::pow(t_max / lo, static_cast<double>(i) / log_points);
        ts.push_back(std::round(raw / step) * step);
      }
      ts.push_back(t_max);
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-9; }),
             ts.end());
    return ts;
  }
};

struct ObservableFlags {
  bool pe = true;
  bool se = false;
  bool entanglement = false;
  bool porter_thomas = false;
};

/// Reference value used to build the deviation series Delta(t) = ref - obs(t).
/// "haar" is the k = 2 closed form; "haar_sampled" estimates the Haar mean by
/// sampling full random states (any k); "tail" uses the trajectory's own
/// long-time average over [tail_lo, tail_hi].
enum class ReferenceMode { haar, haar_sampled, tail };

struct ReferenceSpec {
  ReferenceMode mode = ReferenceMode::haar;
  double tail_lo = 0.0;       // PE tail window
  double tail_hi = 0.0;
  double se_tail_lo = 0.0;    // SE tail window (SE grids are usually shorter)
  double se_tail_hi = 0.0;
  int haar_samples = 200;
};

/// Decay-fit windows. Exponential fits start at exp_t_lo and end at the
/// data-driven crossing (mean Delta < 3 stderr). Power-law fits start at
/// pow_pe_t_lo / pow_se_t_lo and end at min(crossing, pow_*_t_hi).
struct FitWindows {
  double exp_t_lo = 5.0;
  double pow_pe_t_lo = 5.0;
  double pow_se_t_lo = 1.0;
  double pow_pe_t_hi = 1e300;
  double pow_se_t_hi = 1e300;
};

struct ExperimentConfig {
  ModelKind model = ModelKind::kim;
  double theta = 0.0;  // floquet_family interpolation
  int num_qubits = 8;
  double disorder_width = 0.0;
  TimeGridSpec time_grid;
  std::optional<TimeGridSpec> se_time_grid;
  int ensemble_size = 1;
  std::vector<int> renyi_ks = {2};
  ObservableFlags observables;
  std::vector<double> epsilon_list = {0.2};
  std::uint64_t master_seed = 1;
  std::string output_dir;

  bool reference_auto = true;
  ReferenceSpec reference;
  EnergyFilter energy_filter;
  int se_max_qubits = 16;
  int workers = 0;  // 0 = ERGOSIM_WORKERS env or OpenMP default
  FirstLayer circuit_first_layer = FirstLayer::full;
  ChebyshevConfig chebyshev;
  FitWindows fit_windows;
  int saturation_persistence = 5;
  bool per_realization_fits = false;
};

// ---------------------------------------------------------------------------
// Config (de)serialization
// ---------------------------------------------------------------------------

inline json to_json(const TimeGridSpec& g) {
  json j;
  j["type"] = g.kind == TimeGridSpec::Kind::linear ? "linear" : "hybrid";
  j["step"] = g.step;
  j["t_max"] = g.t_max;
  if (g.kind == TimeGridSpec::Kind::hybrid) {
    j["dense_until"] = g.dense_until;
    j["log_points"] = g.log_points;
  }
  return j;
}

inline TimeGridSpec time_grid_from_json(const json& j) {
  TimeGridSpec g;
  const std::string type = j.value("type", "linear");
  if (type == "linear") g.kind = TimeGridSpec::Kind::linear;
  else if (type == "hybrid") g.kind = TimeGridSpec::Kind::hybrid;
  else throw ConfigError("time_grid.type must be linear or hybrid");
  g.step = j.value("step", 1.0);
  g.t_max = j.at("t_max").get<double>();
  g.dense_until = j.value("dense_until", 0.0);
  g.log_points = j.value("log_points", 0);
  return g;
}

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kRunSchemaVersion;
  j["model"] = to_string(c.model);
  if (c.model == ModelKind::floquet_family) j["theta"] = c.theta;
  j["num_qubits"] = c.num_qubits;
  j["disorder_width"] = c.disorder_width;
  j["time_grid"] = to_json(c.time_grid);
  if (c.se_time_grid) j["se_time_grid"] = to_json(*c.se_time_grid);
  j["ensemble_size"] = c.ensemble_size;
  j["renyi_ks"] = c.renyi_ks;
  j["observables"] = {{"pe", c.observables.pe},
                      {"se", c.observables.se},
                      {"entanglement", c.observables.entanglement},
                      {"porter_thomas", c.observables.porter_thomas}};
  j["epsilon_list"] = c.epsilon_list;
  j["master_seed"] = c.master_seed;
  j["output_dir"] = c.output_dir;
  j["reference"] = {{"mode", c.reference_auto
                                ? "auto"
                                : (c.reference.mode == ReferenceMode::haar
                                       ? "haar"
                                       : (c.reference.mode == ReferenceMode::haar_sampled
                                              ? "haar_sampled"
                                              : "tail"))},
                    {"tail_lo", c.reference.tail_lo},
                    {"tail_hi", c.reference.tail_hi},
                    {"se_tail_lo", c.reference.se_tail_lo},
                    {"se_tail_hi", c.reference.se_tail_hi},
                    {"haar_samples", c.reference.haar_samples}};
  j["energy_filter"] = {{"window", c.energy_filter.window},
                        {"literal_lower_edge", c.energy_filter.literal_lower_edge},
                        {"max_tries", c.energy_filter.max_tries}};
  j["se_max_qubits"] = c.se_max_qubits;
  j["circuit_first_layer"] =
      c.circuit_first_layer == FirstLayer::full ? "full" : "offset";
  j["chebyshev"] = {{"tolerance", c.chebyshev.coefficient_tolerance},
                    {"max_order", c.chebyshev.max_order}};
  j["fit_windows"] = {{"exp_t_lo", c.fit_windows.exp_t_lo},
                      {"pow_pe_t_lo", c.fit_windows.pow_pe_t_lo},
                      {"pow_se_t_lo", c.fit_windows.pow_se_t_lo},
                      {"pow_pe_t_hi", c.fit_windows.pow_pe_t_hi},
                      {"pow_se_t_hi", c.fit_windows.pow_se_t_hi}};
  j["saturation_persistence"] = c.saturation_persistence;
  j["per_realization_fits"] = c.per_realization_fits;
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.value("schema_version", kRunSchemaVersion) != kRunSchemaVersion)
      throw ConfigError("config schema_version not supported by this binary");
    c.model = model_from_string(j.at("model").get<std::string>());
    c.theta = j.value("theta", 0.0);
    c.num_qubits = j.at("num_qubits").get<int>();
    c.disorder_width = j.value("disorder_width", 0.0);
    c.time_grid = time_grid_from_json(j.at("time_grid"));
    if (j.contains("se_time_grid"))
      c.se_time_grid = time_grid_from_json(j.at("se_time_grid"));
    c.ensemble_size = j.value("ensemble_size", 1);
    c.renyi_ks = j.value("renyi_ks", std::vector<int>{2});
    if (j.contains("observables")) {
      const auto& o = j.at("observables");
      c.observables.pe = o.value("pe", true);
      c.observables.se = o.value("se", false);
      c.observables.entanglement = o.value("entanglement", false);
      c.observables.porter_thomas = o.value("porter_thomas", false);
    }
    c.epsilon_list = j.value("epsilon_list", std::vector<double>{0.2});
    c.master_seed = j.value("master_seed", std::uint64_t{1});
    c.output_dir = j.value("output_dir", std::string{});
    if (j.contains("reference")) {
      const auto& r = j.at("reference");
      const std::string mode = r.value("mode", "auto");
      c.reference_auto = mode == "auto";
      if (mode == "haar") c.reference.mode = ReferenceMode::haar;
      else if (mode == "haar_sampled") c.reference.mode = ReferenceMode::haar_sampled;
      else if (mode == "tail") c.reference.mode = ReferenceMode::tail;
      else if (mode != "auto") throw ConfigError("reference.mode: " + mode);
      c.reference.tail_lo = r.value("tail_lo", 0.0);
      c.reference.tail_hi = r.value("tail_hi", 0.0);
      c.reference.se_tail_lo = r.value("se_tail_lo", 0.0);
      c.reference.se_tail_hi = r.value("se_tail_hi", 0.0);
      c.reference.haar_samples = r.value("haar_samples", 200);
    }
    if (j.contains("energy_filter")) {
      const auto& f = j.at("energy_filter");
      c.energy_filter.window = f.value("window", 0.05);
      c.energy_filter.literal_lower_edge = f.value("literal_lower_edge", false);
      c.energy_filter.max_tries = f.value("max_tries", 100000);
    }
    c.se_max_qubits = j.value("se_max_qubits", 16);
    c.workers = j.value("workers", 0);
    c.circuit_first_layer = j.value("circuit_first_layer", std::string{"full"}) ==
                                    "offset"
                                ? FirstLayer::offset
                                : FirstLayer::full;
    if (j.contains("chebyshev")) {
      c.chebyshev.coefficient_tolerance = j.at("chebyshev").value("tolerance", 1e-12);
      c.chebyshev.max_order = j.at("chebyshev").value("max_order", 10000);
    }
    if (j.contains("fit_windows")) {
      const auto& f = j.at("fit_windows");
      c.fit_windows.exp_t_lo = f.value("exp_t_lo", 5.0);
      c.fit_windows.pow_pe_t_lo = f.value("pow_pe_t_lo", 5.0);
      c.fit_windows.pow_se_t_lo = f.value("pow_se_t_lo", 1.0);
      c.fit_windows.pow_pe_t_hi = f.value("pow_pe_t_hi", 1e300);
      c.fit_windows.pow_se_t_hi = f.value("pow_se_t_hi", 1e300);
    }
    c.saturation_persistence = j.value("saturation_persistence", 5);
    c.per_realization_fits = j.value("per_realization_fits", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline bool is_discrete_model(ModelKind m) { return m != ModelKind::mfim; }

inline void validate_config(const ExperimentConfig& c) {
  if (c.num_qubits < 1) throw ConfigError("num_qubits must be >= 1");
  if (c.num_qubits > 26) throw ResourceError("num_qubits > 26 exceeds memory budget");
  if (c.ensemble_size < 1) throw ConfigError("ensemble_size must be >= 1");
  if (c.renyi_ks.empty()) throw ConfigError("renyi_ks must be non-empty");
  for (int k : c.renyi_ks)
    if (k < 1 || k > 3) throw ConfigError("renyi_ks must be a subset of {1,2,3}");
  for (double e : c.epsilon_list)
    if (e <= 0.0) throw ConfigError("epsilon values must be > 0");
  if ((c.model == ModelKind::circuit_haar || c.model == ModelKind::circuit_u1) &&
      c.num_qubits % 2 != 0)
    throw ConfigError("circuit models need even N");
  if (c.model == ModelKind::floquet_family && (c.theta < 0.0 || c.theta > 0.5))
    throw ConfigError("theta must lie in [0, 1/2]");
  if (c.observables.se && c.num_qubits > c.se_max_qubits)
    throw ResourceError("stabilizer entropy requested above the SE qubit ceiling");
  const auto ts = c.time_grid.times();
  if (is_discrete_model(c.model)) {
    for (double t : ts)
      if (std::abs(t - std::round(t)) > 1e-9)
        throw ConfigError("Floquet/circuit models need integer observation times");
  }
  if (c.se_time_grid) {
    for (double t : c.se_time_grid->times())
      if (is_discrete_model(c.model) && std::abs(t - std::round(t)) > 1e-9)
        throw ConfigError("se_time_grid needs integer times for this model");
  }
  if (!c.reference_auto && c.reference.mode == ReferenceMode::tail &&
      c.reference.tail_hi > c.reference.tail_lo &&
      c.reference.tail_hi > c.time_grid.t_max + 1e-9)
    throw ConfigError("reference tail window exceeds the time grid");
  if (!c.reference_auto && c.reference.mode == ReferenceMode::haar) {
    for (int k : c.renyi_ks)
      if (k != 2)
        throw ConfigError(
            "closed-form haar reference exists only for k = 2; use haar_sampled");
  }
}

/// Reference mode resolution: Haar values for models that relax to typical
/// states (closed form at k = 2, sampled otherwise); trajectory tail average
/// for energy- or charge-conserving dynamics. Unset tail windows default to
/// the last 40% of the respective observable grid.
inline ReferenceSpec resolve_reference(const ExperimentConfig& c) {
  ReferenceSpec r = c.reference;
  if (c.reference_auto) {
    const bool conserving = c.model == ModelKind::mfim ||
                            c.model == ModelKind::circuit_u1 ||
                            (c.model == ModelKind::floquet_family && c.theta >= 0.5);
    if (conserving) {
      r.mode = ReferenceMode::tail;
    } else {
      const bool only_k2 = std::all_of(c.renyi_ks.begin(), c.renyi_ks.end(),
                                       [](int k) { return k == 2; });
      r.mode = only_k2 ? ReferenceMode::haar : ReferenceMode::haar_sampled;
    }
  }
  if (r.mode == ReferenceMode::tail) {
    if (r.tail_hi <= r.tail_lo) {
      r.tail_lo = 0.6 * c.time_grid.t_max;
      r.tail_hi = c.time_grid.t_max;
    }
    if (r.se_tail_hi <= r.se_tail_lo) {
      const double se_t_max =
          c.se_time_grid ? c.se_time_grid->t_max : c.time_grid.t_max;
      r.se_tail_lo = 0.6 * se_t_max;
      r.se_tail_hi = se_t_max;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Single-realization simulation
// ---------------------------------------------------------------------------

struct RealizationRow {
  int realization = -1;
  std::map<std::string, std::vector<double>> series;
};

inline std::string series_key(const std::string& quantity, int k) {
  return quantity + "_k" + std::to_string(k);
}

inline RealizationRow simulate_realization(const ExperimentConfig& cfg, int r,
                                           const std::vector<double>& pe_times,
                                           const std::vector<double>& se_times) {
  RealizationRow row;
  row.realization = r;

  Rng rng_init = make_rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(r),
                                      StreamRole::initial_state));
  Rng rng_dis = make_rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(r),
                                     StreamRole::disorder));
  const std::uint64_t gates_seed = derive_seed(
      cfg.master_seed, static_cast<std::uint64_t>(r), StreamRole::gates);
  const std::uint64_t lanczos_seed = derive_seed(
      cfg.master_seed, static_cast<std::uint64_t>(r), StreamRole::generic);

  IsingParams params = IsingParams::defaults(cfg.num_qubits, cfg.disorder_width);
  if (cfg.disorder_width > 0.0) params.apply_disorder(rng_dis);

  std::optional<KimTables> kim_tables;
  std::optional<MfimAction> mfim_action;
  std::optional<SpectralBounds> mfim_bounds;
  std::optional<UfStepper> uf_stepper;
  std::optional<GateSampler> sampler;

  StateVector psi(cfg.num_qubits);
  switch (cfg.model) {
    case ModelKind::kim:
      kim_tables.emplace(params);
      psi = random_product_state(cfg.num_qubits, rng_init);
      break;
    case ModelKind::mfim: {
      mfim_action.emplace(params);
      mfim_bounds = lanczos_bounds(*mfim_action, cfg.num_qubits, 60, 0.01,
                                   lanczos_seed);
      psi = energy_filtered_state(*mfim_action, *mfim_bounds, rng_init,
                                  cfg.energy_filter);
      break;
    }
    case ModelKind::floquet_family: {
      FloquetFamilySpec spec{params, cfg.theta};
      uf_stepper.emplace(spec, cfg.chebyshev, lanczos_seed);
      psi = random_product_state(cfg.num_qubits, rng_init);
      break;
    }
    case ModelKind::circuit_haar:
    case ModelKind::circuit_u1:
      sampler = GateSampler{cfg.model == ModelKind::circuit_u1 ? GateKind::u1_block
                                                               : GateKind::haar_u4,
                            gates_seed};
      psi = half_filling_basis_state(cfg.num_qubits, rng_init);
      break;
  }

  // Merged event timeline.
  std::vector<double> events = pe_times;
  events.insert(events.end(), se_times.begin(), se_times.end());
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-9; }),
               events.end());

  const auto near = [](double a, double b) { return std::abs(a - b) < 1e-9; };
  std::size_t pe_idx = 0, se_idx = 0;

  double t_cur = 0.0;
  std::uint64_t layer = 0;
  for (double t_next : events) {
    const double dt = t_next - t_cur;
    if (dt > 1e-12) {
      if (cfg.model == ModelKind::mfim) {
        chebyshev_evolve_split(psi, *mfim_action, *mfim_bounds, dt, cfg.chebyshev);
      } else {
        const auto steps = static_cast<std::int64_t>(std::llround(dt));
        for (std::int64_t s = 0; s < steps; ++s) {
          ++layer;
          if (cfg.model == ModelKind::kim) kim_step(psi, *kim_tables);
          else if (cfg.model == ModelKind::floquet_family) uf_stepper->step(psi);
          else brickwall_step(psi, layer, *sampler, cfg.circuit_first_layer);
        }
      }
      t_cur = t_next;
    }

    if (pe_idx < pe_times.size() && near(pe_times[pe_idx], t_next)) {
      ++pe_idx;
      if (cfg.observables.pe) {
        for (int k : cfg.renyi_ks)
          row.series[series_key("pe", k)].push_back(
              participation_entropy(psi, static_cast<double>(k)));
        row.series["collision"].push_back(collision_probability(psi));
      }
      if (cfg.observables.entanglement)
        row.series["entanglement"].push_back(renyi2_entanglement_halfcut(psi));
      if (cfg.observables.porter_thomas)
        row.series["porter_thomas"].push_back(porter_thomas_distance(psi));
    }
    if (cfg.observables.se && se_idx < se_times.size() &&
        near(se_times[se_idx], t_next)) {
      ++se_idx;
      const auto summary = pauli_spectrum_summary(psi, cfg.renyi_ks);
      for (int k : cfg.renyi_ks)
        row.series[series_key("se", k)].push_back(stabilizer_entropy(summary, k));
    }
  }
  return row;
}

// ---------------------------------------------------------------------------
// Analysis of an assembled ensemble
// ---------------------------------------------------------------------------

struct FitRow {
  std::string quantity;  // "pe" | "se"
  int k = 2;
  FitResult fit;
};

struct SatRow {
  std::string quantity;
  int k = 2;
  SaturationResult sat;
};

struct RunResult {
  ExperimentConfig config;
  std::vector<double> pe_times;
  std::vector<double> se_times;
  std::map<std::string, EnsembleSeries> series;
  std::map<std::string, double> references;
  std::vector<FitRow> fits;
  std::vector<SatRow> sats;
  std::vector<std::string> fit_errors;

  const FitResult* find_fit(const std::string& quantity, int k, FitModel m) const {
    for (const auto& f : fits)
      if (f.quantity == quantity && f.k == k && f.fit.model == m) return &f.fit;
    return nullptr;
  }
  const SaturationResult* find_saturation(const std::string& quantity, int k,
                                          double epsilon) const {
    for (const auto& s : sats)
      if (s.quantity == quantity && s.k == k &&
          std::abs(s.sat.epsilon - epsilon) < 1e-12)
        return &s.sat;
    return nullptr;
  }
};

/// Mean Haar-state observables by direct sampling (used as the reference for
/// Renyi indices without a closed form).
struct HaarBaselines {
  std::map<int, double> pe;
  std::map<int, double> se;
};

inline HaarBaselines sample_haar_baselines(int num_qubits, std::span<const int> ks,
                                           bool want_se, int samples,
                                           std::uint64_t seed) {
  HaarBaselines base;
  for (int s = 0; s < samples; ++s) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(s),
                                   StreamRole::generic));
    const StateVector psi = haar_random_state(num_qubits, rng);
    for (int k : ks)
      base.pe[k] += participation_entropy(psi, static_cast<double>(k));
    if (want_se) {
      const auto summary = pauli_spectrum_summary(psi, ks);
      for (int k : ks) base.se[k] += stabilizer_entropy(summary, k);
    }
  }
  for (auto& [k, v] : base.pe) v /= samples;
  for (auto& [k, v] : base.se) v /= samples;
  return base;
}

inline void analyze_run(RunResult& result) {
  const ExperimentConfig& cfg = result.config;
  const ReferenceSpec ref = resolve_reference(cfg);
  result.fits.clear();
  result.sats.clear();
  result.fit_errors.clear();

  std::optional<HaarBaselines> sampled;
  if (ref.mode == ReferenceMode::haar_sampled)
    sampled = sample_haar_baselines(cfg.num_qubits, cfg.renyi_ks,
                                    cfg.observables.se, ref.haar_samples,
                                    cfg.master_seed ^ 0x9e3779b97f4a7c15ull);

  for (const std::string quantity : {std::string("pe"), std::string("se")}) {
    if (quantity == "pe" && !cfg.observables.pe) continue;
    if (quantity == "se" && !cfg.observables.se) continue;
    for (int k : cfg.renyi_ks) {
      const std::string key = series_key(quantity, k);
      const auto it = result.series.find(key);
      if (it == result.series.end()) continue;
      const EnsembleSeries& series = it->second;

      double reference = 0.0;
      try {
        switch (ref.mode) {
          case ReferenceMode::haar:
            reference = quantity == "pe" ? haar_pe_k2(cfg.num_qubits)
                                         : haar_se_k2(cfg.num_qubits);
            break;
          case ReferenceMode::haar_sampled:
            reference = quantity == "pe" ? sampled->pe.at(k) : sampled->se.at(k);
            break;
          case ReferenceMode::tail: {
            const double lo = quantity == "pe" ? ref.tail_lo : ref.se_tail_lo;
            const double hi = quantity == "pe" ? ref.tail_hi : ref.se_tail_hi;
            reference = long_time_average(series, lo, hi).value;
            break;
          }
        }
      } catch (const std::exception& e) {
        result.fit_errors.push_back(key + "/reference: " + e.what());
        continue;
      }
      result.references[key] = reference;

      const auto means = series.means();
      const auto errs = series.stderrs();
      std::vector<double> deltas(means.size());
      for (std::size_t i = 0; i < means.size(); ++i) deltas[i] = reference - means[i];

      const double pow_t_lo = quantity == "pe" ? cfg.fit_windows.pow_pe_t_lo
                                               : cfg.fit_windows.pow_se_t_lo;
      const double pow_t_hi = quantity == "pe" ? cfg.fit_windows.pow_pe_t_hi
                                               : cfg.fit_windows.pow_se_t_hi;
      for (FitModel model : {FitModel::exponential, FitModel::power_law}) {
        const double t_lo =
            model == FitModel::exponential ? cfg.fit_windows.exp_t_lo : pow_t_lo;
        try {
          double t_hi = fit_window_end(series.times, deltas, errs, t_lo);
          if (model == FitModel::power_law) t_hi = std::min(t_hi, pow_t_hi);
          const FitResult fit =
              model == FitModel::exponential
                  ? fit_exponential(series.times, deltas, t_lo, t_hi)
                  : fit_powerlaw(series.times, deltas, t_lo, t_hi);
          result.fits.push_back({quantity, k, fit});
        } catch (const std::exception& e) {
          result.fit_errors.push_back(key + "/" + to_string(model) + ": " + e.what());
        }
      }
      for (double eps : cfg.epsilon_list) {
        SatRow sr{quantity, k,
                  saturation_time(series.times, deltas, eps,
                                  cfg.saturation_persistence)};
        result.sats.push_back(std::move(sr));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_series_csv(const std::filesystem::path& path,
                             const ExperimentConfig& cfg,
                             const std::vector<std::pair<int, const EnsembleSeries*>>& blocks) {
  std::ofstream out(path);
  out << "model,N,k,t,mean,stderr,p20,p33,p50,p66,p80\n";
  for (const auto& [k, series] : blocks) {
    for (std::size_t i = 0; i < series->times.size(); ++i) {
      out << to_string(cfg.model) << ',' << cfg.num_qubits << ',' << k << ','
          << fmt_double(series->times[i]) << ',' << fmt_double(series->mean(i))
          << ',' << fmt_double(series->stderr_mean(i));
      for (double q : {20.0, 33.0, 50.0, 66.0, 80.0})
        out << ',' << fmt_double(series->percentile(q, i));
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace detail

inline void export_run(const RunResult& result) {
  namespace fs = std::filesystem;
  const ExperimentConfig& cfg = result.config;
  const fs::path dir(cfg.output_dir);

  // Per-observable time series.
  for (const std::string quantity : {std::string("pe"), std::string("se")}) {
    std::vector<std::pair<int, const EnsembleSeries*>> blocks;
    for (int k : cfg.renyi_ks) {
      const auto it = result.series.find(series_key(quantity, k));
      if (it != result.series.end()) blocks.emplace_back(k, &it->second);
    }
    if (!blocks.empty())
      detail::write_series_csv(dir / ("series_" + quantity + ".csv"), cfg, blocks);
  }
  for (const std::string obs :
       {std::string("collision"), std::string("entanglement"),
        std::string("porter_thomas")}) {
    const auto it = result.series.find(obs);
    if (it != result.series.end())
      detail::write_series_csv(dir / ("series_" + obs + ".csv"), cfg,
                               {{0, &it->second}});
  }

  // Fit table.
  {
    std::ofstream out(dir / "fits.csv");
    out << "model,N,k,quantity,fit_model,amplitude,rate_or_exponent,stderr,"
           "window_lo,window_hi,residual_rms\n";
    for (const auto& f : result.fits) {
      out << to_string(cfg.model) << ',' << cfg.num_qubits << ',' << f.k << ','
          << f.quantity << ',' << to_string(f.fit.model) << ','
          << detail::fmt_double(f.fit.amplitude) << ','
          << detail::fmt_double(f.fit.rate_or_exponent) << ','
          << detail::fmt_double(f.fit.rate_std_error) << ','
          << detail::fmt_double(f.fit.window_lo) << ','
          << detail::fmt_double(f.fit.window_hi) << ','
          << detail::fmt_double(f.fit.residual_rms) << '\n';
    }
  }

  // Saturation table.
  {
    std::ofstream out(dir / "saturation.csv");
    out << "model,N,k,quantity,epsilon,t_sat,defined\n";
    for (const auto& s : result.sats) {
      out << to_string(cfg.model) << ',' << cfg.num_qubits << ',' << s.k << ','
          << s.quantity << ',' << detail::fmt_double(s.sat.epsilon) << ','
          << detail::fmt_double(s.sat.defined ? s.sat.t_sat : -1.0) << ','
          << (s.sat.defined ? 1 : 0) << '\n';
    }
  }

  // JSON mirror of everything above.
  json j;
  j["config"] = to_json(cfg);
  j["references"] = result.references;
  json js;
  for (const auto& [key, series] : result.series) {
    json s;
    s["times"] = series.times;
    s["mean"] = series.means();
    s["stderr"] = series.stderrs();
    for (double q : {20.0, 33.0, 50.0, 66.0, 80.0}) {
      std::vector<double> col(series.times.size());
      for (std::size_t i = 0; i < col.size(); ++i) col[i] = series.percentile(q, i);
      s["p" + std::to_string(static_cast<int>(q))] = col;
    }
    js[key] = std::move(s);
  }
  j["series"] = std::move(js);
  json jf = json::array();
  for (const auto& f : result.fits) {
    jf.push_back({{"model", to_string(cfg.model)},
                  {"N", cfg.num_qubits},
                  {"k", f.k},
                  {"quantity", f.quantity},
                  {"fit_model", to_string(f.fit.model)},
                  {"amplitude", f.fit.amplitude},
                  {"rate_or_exponent", f.fit.rate_or_exponent},
                  {"stderr", f.fit.rate_std_error},
                  {"window_lo", f.fit.window_lo},
                  {"window_hi", f.fit.window_hi},
                  {"residual_rms", f.fit.residual_rms}});
  }
  j["fits"] = std::move(jf);
  json jsat = json::array();
  for (const auto& s : result.sats) {
    jsat.push_back({{"model", to_string(cfg.model)},
                    {"N", cfg.num_qubits},
                    {"k", s.k},
                    {"quantity", s.quantity},
                    {"epsilon", s.sat.epsilon},
                    {"t_sat", s.sat.defined ? s.sat.t_sat : -1.0},
                    {"defined", s.sat.defined}});
  }
  j["saturation"] = std::move(jsat);
  if (!result.fit_errors.empty()) j["fit_errors"] = result.fit_errors;
  std::ofstream out(dir / "results.json");
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("cannot write results.json");
}

// ---------------------------------------------------------------------------
// Checkpointed ensemble execution
// ---------------------------------------------------------------------------

namespace detail {

inline json config_fingerprint(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("workers");      // execution detail, not part of the experiment
  j.erase("output_dir");   // the directory identifies itself
  return j;
}

inline std::vector<RealizationRow> load_rows(const std::filesystem::path& file,
                                             int ensemble_size) {
  std::vector<RealizationRow> rows;
  std::ifstream in(file);
  if (!in) return rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      break;  // trailing partial line from an interrupted run; recompute it
    }
    RealizationRow row;
    row.realization = j.at("realization").get<int>();
    for (const auto& [key, vals] : j.at("series").items())
      row.series[key] = vals.get<std::vector<double>>();
    if (row.realization >= 0 && row.realization < ensemble_size)
      rows.push_back(std::move(row));
  }
  return rows;
}

inline int resolve_workers(const ExperimentConfig& cfg) {
  if (cfg.workers > 0) return cfg.workers;
  if (const char* env = std::getenv("ERGOSIM_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return omp_get_max_threads();
}

}  // namespace detail

/// Runs (or resumes) the configured ensemble, writes all output tables into
/// cfg.output_dir, and returns the assembled results. A directory holding a
/// finished run is loaded without resimulation; a partial one is continued at
/// realization granularity.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  validate_config(cfg);
  if (cfg.output_dir.empty()) throw ConfigError("output_dir must be set");
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);

  const json fingerprint = detail::config_fingerprint(cfg);
  const fs::path cfg_path = dir / "config.json";
  if (fs::exists(cfg_path)) {
    std::ifstream in(cfg_path);
    json stored;
    try {
      in >> stored;
    } catch (const json::exception&) {
      throw CheckpointError("config.json in run directory is corrupt");
    }
    if (stored.value("schema_version", -1) != kRunSchemaVersion)
      throw CheckpointError("run directory was written by an incompatible version");
    json stored_fp = stored;
    stored_fp.erase("workers");
    stored_fp.erase("output_dir");
    if (stored_fp != fingerprint)
      throw CheckpointError(
          "run directory holds a different experiment config; refusing to resume");
  } else {
    json stored = to_json(cfg);
    std::ofstream out(cfg_path);
    out << stored.dump(1) << '\n';
    if (!out) throw std::runtime_error("cannot write config.json");
  }

  const std::vector<double> pe_times = cfg.time_grid.times();
  const std::vector<double> se_times =
      cfg.observables.se
          ? (cfg.se_time_grid ? cfg.se_time_grid->times() : pe_times)
          : std::vector<double>{};

  const fs::path rows_path = dir / "realizations.jsonl";
  std::vector<RealizationRow> done = detail::load_rows(rows_path, cfg.ensemble_size);
  std::vector<bool> have(static_cast<std::size_t>(cfg.ensemble_size), false);
  std::vector<RealizationRow> rows(static_cast<std::size_t>(cfg.ensemble_size));
  for (auto& row : done) {
    have[static_cast<std::size_t>(row.realization)] = true;
    rows[static_cast<std::size_t>(row.realization)] = std::move(row);
  }
  std::vector<int> missing;
  for (int r = 0; r < cfg.ensemble_size; ++r)
    if (!have[static_cast<std::size_t>(r)]) missing.push_back(r);

  if (!missing.empty()) {
    std::ofstream append(rows_path, std::ios::app);
    const int workers = detail::resolve_workers(cfg);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(missing.size()); ++i) {
      try {
        const int r = missing[static_cast<std::size_t>(i)];
        RealizationRow row = simulate_realization(cfg, r, pe_times, se_times);
        json j;
        j["realization"] = row.realization;
        j["series"] = row.series;
        const std::string line = j.dump();
#pragma omp critical(ergosim_row_io)
        {
          append << line << '\n';
          append.flush();
          rows[static_cast<std::size_t>(r)] = std::move(row);
        }
      } catch (...) {
#pragma omp critical(ergosim_row_io)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  RunResult result;
  result.config = cfg;
  result.pe_times = pe_times;
  result.se_times = se_times;
  for (const auto& row : rows) {
    for (const auto& [key, vals] : row.series) {
      EnsembleSeries& s = result.series[key];
      if (s.times.empty())
        s.times = key.rfind("se_", 0) == 0 ? se_times : pe_times;
      s.values.push_back(vals);
    }
  }
  for (auto& [key, s] : result.series) s.check_shape();

  analyze_run(result);
  export_run(result);
  return result;
}

/// Re-runs the analysis of a finished (or partial) run directory without
/// resimulation, optionally overriding the saturation thresholds.
inline RunResult analyze_directory(const std::string& run_dir,
                                   const std::vector<double>& epsilon_override = {}) {
  namespace fs = std::filesystem;
  const fs::path dir(run_dir);
  std::ifstream in(dir / "config.json");
  if (!in) throw CheckpointError("no config.json in " + run_dir);
  json stored;
  try {
    in >> stored;
  } catch (const json::exception&) {
    throw CheckpointError("config.json in run directory is corrupt");
  }
  ExperimentConfig cfg = config_from_json(stored);
  cfg.output_dir = run_dir;
  if (!epsilon_override.empty()) cfg.epsilon_list = epsilon_override;

  const std::vector<double> pe_times = cfg.time_grid.times();
  const std::vector<double> se_times =
      cfg.observables.se
          ? (cfg.se_time_grid ? cfg.se_time_grid->times() : pe_times)
          : std::vector<double>{};
  auto rows = detail::load_rows(dir / "realizations.jsonl", cfg.ensemble_size);
  if (rows.empty()) throw CheckpointError("no realizations recorded in " + run_dir);
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.realization < b.realization; });

  RunResult result;
  result.config = cfg;
  result.pe_times = pe_times;
  result.se_times = se_times;
  for (const auto& row : rows) {
    for (const auto& [key, vals] : row.series) {
      EnsembleSeries& s = result.series[key];
      if (s.times.empty())
        s.times = key.rfind("se_", 0) == 0 ? se_times : pe_times;
      s.values.push_back(vals);
    }
  }
  for (auto& [key, s] : result.series) s.check_shape();
  analyze_run(result);
  export_run(result);
  return result;
}

}  // namespace ergosim
