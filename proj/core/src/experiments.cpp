#include "homodyne/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include "homodyne/backend.hpp"
#include "homodyne/em_problems.hpp"
#include "homodyne/equalizer.hpp"
#include "homodyne/linalg.hpp"
#include "homodyne/onn.hpp"
#include "homodyne/quantization.hpp"
#include "homodyne/rng.hpp"

namespace homodyne {
namespace {

using nlohmann::json;

// Subsets are pinned independently of the run seed so that every noise seed
// scores the same images.
constexpr std::uint64_t kSubsetSeed = 0x53b5e7ULL;

struct NamePair {
  const char* name;
  int value;
};

constexpr NamePair kExperiments[] = {
    {"equalize", int(ExperimentKind::Equalize)},
    {"charge", int(ExperimentKind::Charge)},
    {"efie", int(ExperimentKind::Efie)},
    {"glider-synthetic", int(ExperimentKind::GliderSynthetic)},
    {"mnist-real", int(ExperimentKind::MnistReal)},
    {"mnist-complex", int(ExperimentKind::MnistComplex)},
    {"bitslice-demo", int(ExperimentKind::BitsliceDemo)},
    {"flower", int(ExperimentKind::Flower)},
};

constexpr NamePair kBackends[] = {
    {"exact", int(BackendKind::Exact)},
    {"analog", int(BackendKind::Analog)},
    {"split", int(BackendKind::Split)},
    {"bitsliced", int(BackendKind::Bitsliced)},
};

template <std::size_t N>
std::string name_of(const NamePair (&table)[N], int value) {
  for (const auto& p : table) {
    if (p.value == value) return p.name;
  }
  throw std::logic_error("unmapped enum value");
}

template <std::size_t N>
int value_of(const NamePair (&table)[N], const std::string& name,
             const char* what) {
  for (const auto& p : table) {
    if (name == p.name) return p.value;
  }
  std::string options;
  for (const auto& p : table) {
    if (!options.empty()) options += ", ";
    options += p.name;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + name +
                    "' (expected one of: " + options + ")");
}

[[noreturn]] void fail_key(const std::string& path, const std::string& key) {
  throw ConfigError("unknown config key '" +
                    (path.empty() ? key : path + "." + key) + "'");
}

void require_keys(const json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail_key(path, item.key());
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

template <typename T>
void read_number(const json& obj, const std::string& path, const char* key,
                 T* out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_number()) {
      throw ConfigError("config key '" + path + "." + key +
                        "' must be a number");
    }
    *out = v->get<T>();
  }
}

void read_flag(const json& obj, const std::string& path, const char* key,
               bool* out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_boolean()) {
      throw ConfigError("config key '" + path + "." + key +
                        "' must be a boolean");
    }
    *out = v->get<bool>();
  }
}

void read_string(const json& obj, const std::string& path, const char* key,
                 std::string* out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_string()) {
      throw ConfigError("config key '" + path + "." + key +
                        "' must be a string");
    }
    *out = v->get<std::string>();
  }
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v == nullptr ? std::string() : std::string(v);
}

json stats_json(const ErrorStats& s) {
  return json{{"sigma_pct", 100.0 * s.sigma}, {"bits", s.bits}};
}

json vec_json(const std::vector<double>& v) { return json(v); }

json complex_pairs(const ComplexVector& v) {
  json out = json::array();
  for (const cplx& z : v) out.push_back(json::array({z.real(), z.imag()}));
  return out;
}

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::int64_t> counts;
};

Histogram histogram(const std::vector<double>& values, double lo, double hi,
                    std::size_t bins) {
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  const double width = hi - lo;
  for (double v : values) {
    double t = (v - lo) / width;
    auto idx = static_cast<std::ptrdiff_t>(t * static_cast<double>(bins));
    idx = std::clamp<std::ptrdiff_t>(idx, 0,
                                     static_cast<std::ptrdiff_t>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(idx)];
  }
  return h;
}

/// Owns whichever backend chain the config asks for; `use` points at the
/// outermost one.
struct BackendBundle {
  std::unique_ptr<MvmBackend> inner;
  std::unique_ptr<MvmBackend> outer;
  MvmBackend* use = nullptr;
};

std::unique_ptr<MvmBackend> make_plain_backend(BackendKind kind,
                                               const EmulatorConfig& cfg) {
  switch (kind) {
    case BackendKind::Exact:
      return std::make_unique<ExactBackend>();
    case BackendKind::Analog:
      return std::make_unique<AnalogBackend>(cfg);
    case BackendKind::Bitsliced:
      return std::make_unique<BitslicedBackend>(cfg);
    case BackendKind::Split:
      break;
  }
  throw ConfigError("split backend cannot nest inside itself");
}

BackendBundle make_backend(const ExperimentConfig& cfg,
                           const ComplexMatrix& A) {
  BackendBundle b;
  if (cfg.backend == BackendKind::Split) {
    SparseDenseSplit split =
        cfg.experiment == ExperimentKind::GliderSynthetic
            ? split_threshold(A, cfg.problem.outlier_fraction)
            : split_band(A, static_cast<int>(2 * cfg.problem.band_halfwidth +
                                             1));
    b.inner = make_plain_backend(cfg.split_inner, cfg.emulator);
    b.outer = std::make_unique<SplitBackend>(std::move(split), *b.inner);
    b.use = b.outer.get();
  } else {
    b.outer = make_plain_backend(cfg.backend, cfg.emulator);
    b.use = b.outer.get();
  }
  return b;
}

json trace_json(const SolverTrace& tr) {
  json rows = json::array();
  for (const OuterRecord& r : tr.outer) {
    rows.push_back(json{{"outer_iter", r.outer_iter},
                        {"residual", r.residual},
                        {"inner_iters", r.inner_iters},
                        {"digital_mvms", r.digital_mvms},
                        {"analog_mvms", r.analog_mvms}});
  }
  return rows;
}

json solve_results(const SolverTrace& tr, const ComplexVector& truth,
                   const ComplexMatrix& A) {
  const ChannelErrorStats err = error_stats(tr.solution, truth);
  return json{{"backend", tr.backend_name},
              {"converged", tr.converged},
              {"outer_iterations", tr.outer_iterations},
              {"digital_mvms", tr.digital_mvms},
              {"inner_mvms", tr.inner_mvms},
              {"analog_mvms", tr.analog_mvms},
              {"analog_ops", tr.analog_ops},
              {"analog_fraction", tr.analog_fraction()},
              {"final_residual", tr.final_residual},
              {"solution_sigma_pct",
               100.0 * std::max(err.real_part.sigma, err.imag_part.sigma)},
              {"solution_sigma_real_pct", 100.0 * err.real_part.sigma},
              {"solution_sigma_imag_pct", 100.0 * err.imag_part.sigma},
              {"n", A.rows},
              {"trace", trace_json(tr)},
              {"solution", complex_pairs(tr.solution)},
              {"truth", complex_pairs(truth)}};
}

json run_charge(const ExperimentConfig& cfg) {
  WireChargeProblem p;
  p.segments = cfg.problem.segments;
  p.length = cfg.problem.length;
  p.radius = cfg.problem.wire_radius;
  p.potential = cfg.problem.potential;
  p.validate();
  const auto [A, b] = assemble_charge_system(p);
  const ComplexVector truth = solve_direct(A, b);
  BackendBundle bk = make_backend(cfg, A);
  const SolverTrace tr = refine(A, b, *bk.use, cfg.solver);
  json out = solve_results(tr, truth, A);
  out["problem"] = "charge";
  return out;
}

json run_efie(const ExperimentConfig& cfg) {
  WireEfieProblem p;
  p.match_points = cfg.problem.match_points;
  p.half_length = cfg.problem.half_length;
  p.radius = cfg.problem.efie_radius;
  p.validate();
  const ComplexMatrix A = assemble_efie_matrix(p);
  const ComplexVector b = delta_gap_rhs(p);
  const ComplexVector truth = solve_direct(A, b);
  BackendBundle bk = make_backend(cfg, A);
  const SolverTrace tr = refine(A, b, *bk.use, cfg.solver);
  json out = solve_results(tr, truth, A);
  out["problem"] = "efie";
  if (auto* split = dynamic_cast<SplitBackend*>(bk.use)) {
    const std::size_t entries = split->split().sparse.size();
    out["sparse_entries"] = entries;
    out["sparse_fraction"] = static_cast<double>(entries) /
                             static_cast<double>(A.rows * A.cols);
  }
  return out;
}

json run_glider(const ExperimentConfig& cfg) {
  SyntheticHDRSystem s;
  s.size = cfg.problem.size;
  s.dynamic_range_db = cfg.problem.dynamic_range_db;
  s.band_width = cfg.problem.band_width;
  s.seed = cfg.seed;
  s.validate();
  const SynthSystem sys = synth_hdr_system(s);
  const ComplexVector truth = solve_direct(sys.A, sys.b);

  json out{{"problem", "glider-synthetic"},
           {"condition_estimate", sys.condition_estimate},
           {"attempts", sys.attempts},
           {"outliers", sys.outliers}};

  {  // (a) plain low-precision refinement: quantization error swamps it.
    AnalogBackend plain(cfg.emulator);
    const SolverTrace tr = refine(sys.A, sys.b, plain, cfg.solver);
    out["plain8"] = solve_results(tr, truth, sys.A);
  }
  {  // (b) outlier split + bit-sliced remainder.
    SparseDenseSplit split =
        split_threshold(sys.A, cfg.problem.outlier_fraction);
    out["sparse_entries"] = split.sparse.size();
    out["sparse_fraction"] = static_cast<double>(split.sparse.size()) /
                             static_cast<double>(sys.A.rows * sys.A.cols);
    BitslicedBackend inner(cfg.emulator);
    SplitBackend backend(std::move(split), inner);
    const SolverTrace tr = refine(sys.A, sys.b, backend, cfg.solver);
    out["split_sliced"] = solve_results(tr, truth, sys.A);
  }
  return out;
}

json run_equalize(const ExperimentConfig& cfg) {
  const ChannelModel ch = ChannelModel::default_synthetic();
  ProbeConfig probe;
  probe.n_datasets = cfg.problem.n_datasets;
  probe.symbols_per_dataset = cfg.problem.block;
  probe.seed = cfg.seed;
  probe.validate();
  const std::vector<double> payload = default_test_payload(
      cfg.problem.payload_length, derive_seed(cfg.seed, 0xda7aULL));
  const EqualizationReport rep =
      equalization_report(ch, probe, payload, cfg.problem.bandwidth_limit);

  double spread = 1e-12;
  for (double e : rep.errors_before) spread = std::max(spread, std::abs(e));
  for (double e : rep.errors_after) spread = std::max(spread, std::abs(e));
  const std::size_t bins = 41;
  const Histogram hb = histogram(rep.errors_before, -spread, spread, bins);
  const Histogram ha = histogram(rep.errors_after, -spread, spread, bins);

  return json{{"problem", "equalize"},
              {"before", stats_json(rep.before)},
              {"after", stats_json(rep.after)},
              {"sigma_before_pct", 100.0 * rep.before.sigma},
              {"sigma_after_pct", 100.0 * rep.after.sigma},
              {"clamped_bins", rep.clamped_bins},
              {"unexcited_bins", rep.unexcited_bins},
              {"h_mag", vec_json(rep.h_mag)},
              {"spectrum_input", vec_json(rep.spectrum_input)},
              {"spectrum_before", vec_json(rep.spectrum_before)},
              {"spectrum_after", vec_json(rep.spectrum_after)},
              {"histogram",
               json{{"lo", -spread},
                    {"hi", spread},
                    {"samples", rep.errors_before.size()},
                    {"counts_before", hb.counts},
                    {"counts_after", ha.counts}}}};
}

json run_flower(const ExperimentConfig& cfg) {
  const std::size_t n = cfg.problem.samples;
  const std::size_t block = std::min(cfg.problem.block, n);
  ComplexVector input(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(n);
    const double r =
        std::cos(static_cast<double>(cfg.problem.petals) * theta);
    input[i] = std::polar(r, theta);
  }

  ComplexVector measured(n);
  std::uint64_t stream = 0;
  for (std::size_t start = 0; start < n; start += block, ++stream) {
    const std::size_t m = std::min(block, n - start);
    const ComplexMatrix eye = ComplexMatrix::identity(m);
    const ComplexVector xb(input.begin() + start, input.begin() + start + m);
    const AnalogResult res = analog_mvm(eye, xb, cfg.emulator, stream);
    std::copy(res.value.begin(), res.value.end(), measured.begin() + start);
  }

  const ChannelErrorStats err = error_stats(measured, input);
  json samples = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    samples.push_back(json::array({input[i].real(), input[i].imag(),
                                   measured[i].real(), measured[i].imag()}));
  }
  return json{{"problem", "flower"},
              {"n_samples", n},
              {"petals", cfg.problem.petals},
              {"sigma_real_pct", 100.0 * err.real_part.sigma},
              {"sigma_imag_pct", 100.0 * err.imag_part.sigma},
              {"bits_real", err.real_part.bits},
              {"bits_imag", err.imag_part.bits},
              {"full_scale", err.full_scale},
              {"samples", samples}};
}

std::string resolve_mnist_dir(const ExperimentConfig& cfg) {
  if (!cfg.problem.data_dir.empty()) return cfg.problem.data_dir;
  const std::string env = env_or_empty("HOMODYNE_MNIST_DIR");
  if (!env.empty()) return env;
  throw ConfigError(
      "MNIST directory not set: pass problem.data_dir or set "
      "HOMODYNE_MNIST_DIR");
}

std::string resolve_weights(const ExperimentConfig& cfg, const char* stem) {
  if (!cfg.problem.weights.empty()) return cfg.problem.weights;
  const std::string env = env_or_empty("HOMODYNE_WEIGHTS_DIR");
  if (!env.empty()) return env + "/" + stem;
  throw ConfigError(
      "weight file not set: pass problem.weights or set "
      "HOMODYNE_WEIGHTS_DIR");
}

json confusion_json(const EvalReport& rep) {
  json rows = json::array();
  for (std::size_t r = 0; r < kMnistClasses; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < kMnistClasses; ++c) {
      row.push_back(rep.confusion[r * kMnistClasses + c]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename Net, typename Eval>
json run_mnist(const ExperimentConfig& cfg, const char* kind,
               const char* weight_stem, Net (*loader)(const std::string&),
               Eval&& evaluate) {
  MnistSet test;
  Net net;
  try {
    test = load_mnist_split(resolve_mnist_dir(cfg), false);
    net = loader(resolve_weights(cfg, weight_stem));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  const std::vector<std::size_t> indices =
      select_subset(test.count, cfg.problem.subset, kSubsetSeed);

  const EvalReport digital = evaluate(net, test, indices, nullptr);
  EmulatorConfig ecfg = cfg.emulator;
  const EvalReport analog = evaluate(net, test, indices, &ecfg);

  return json{{"problem", kind},
              {"subset", indices.size()},
              {"weights_digital_accuracy", net.digital_accuracy},
              {"digital_accuracy", digital.accuracy},
              {"analog_accuracy", analog.accuracy},
              {"drop_points", 100.0 * (digital.accuracy - analog.accuracy)},
              {"ratio", digital.accuracy > 0.0
                            ? analog.accuracy / digital.accuracy
                            : 0.0},
              {"sigma", cfg.emulator.sigma},
              {"confusion_digital", confusion_json(digital)},
              {"confusion_analog", confusion_json(analog)}};
}

json run_bitslice_demo(const ExperimentConfig& cfg) {
  json examples = json::array();
  for (int v : {300, -300, 32767, -32767, 0, 255, -1}) {
    const BitSlicedInt s = slice16(v);
    examples.push_back(json{{"value", v}, {"high", s.high}, {"low", s.low}});
  }

  ExactBackend exact;
  const std::vector<std::int64_t> scalar =
      bitsliced_mvm({500}, 1, 1, {300}, exact);

  const std::size_t m = cfg.problem.demo_size;
  auto rng = make_rng(cfg.seed, 0xb175ULL);
  std::uniform_int_distribution<int> dist(-32767, 32767);
  std::vector<int> w(m * m), x(m);
  for (int& v : w) v = dist(rng);
  for (int& v : x) v = dist(rng);
  const std::vector<std::int64_t> sliced = bitsliced_mvm(w, m, m, x, exact);
  std::int64_t max_diff = 0;
  for (std::size_t r = 0; r < m; ++r) {
    std::int64_t direct = 0;
    for (std::size_t c = 0; c < m; ++c) {
      direct += static_cast<std::int64_t>(w[r * m + c]) *
                static_cast<std::int64_t>(x[c]);
    }
    max_diff = std::max(max_diff, std::abs(direct - sliced[r]));
  }

  return json{{"problem", "bitslice-demo"},
              {"examples", examples},
              {"scalar_product", scalar[0]},
              {"size", m},
              {"max_abs_diff", max_diff},
              {"backend_mvms", exact.counters().digital_mvms}};
}

void check_positive(double v, const char* key) {
  if (!(v > 0.0)) {
    throw ConfigError(std::string("config key 'problem.") + key +
                      "' must be positive");
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  return name_of(kExperiments, int(kind));
}

std::string to_string(BackendKind kind) { return name_of(kBackends, int(kind)); }

ExperimentKind experiment_from_string(const std::string& name) {
  return ExperimentKind(value_of(kExperiments, name, "experiment"));
}

BackendKind backend_from_string(const std::string& name) {
  return BackendKind(value_of(kBackends, name, "backend kind"));
}

void ExperimentConfig::finalize() {
  if (!preset.empty()) {
    const auto sigma = sigma_preset(preset);
    if (!sigma.has_value()) {
      std::string names;
      for (const auto& [name, value] : sigma_presets()) {
        if (!names.empty()) names += ", ";
        names += name;
      }
      throw ConfigError("unknown sigma preset '" + preset +
                        "' (expected one of: " + names + ")");
    }
    emulator.sigma = *sigma;
  }
  emulator.seed = seed;
  try {
    emulator.validate();
    solver.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  switch (experiment) {
    case ExperimentKind::Charge:
      if (problem.segments < 2) {
        throw ConfigError("config key 'problem.segments' must be >= 2");
      }
      check_positive(problem.length, "length");
      check_positive(problem.wire_radius, "radius");
      break;
    case ExperimentKind::Efie:
      if (problem.match_points < 3 || problem.match_points % 2 == 0) {
        throw ConfigError(
            "config key 'problem.match_points' must be odd and >= 3");
      }
      check_positive(problem.half_length, "half_length");
      check_positive(problem.efie_radius, "radius");
      if (problem.band_halfwidth == 0 ||
          problem.band_halfwidth >= problem.match_points) {
        throw ConfigError(
            "config key 'problem.band_halfwidth' must be in [1, N)");
      }
      break;
    case ExperimentKind::GliderSynthetic:
      if (problem.size < 16) {
        throw ConfigError("config key 'problem.size' must be >= 16");
      }
      check_positive(problem.dynamic_range_db, "dynamic_range_db");
      check_positive(problem.outlier_fraction, "outlier_fraction");
      break;
    case ExperimentKind::Equalize: {
      if (problem.payload_length < 2) {
        throw ConfigError("config key 'problem.payload_length' must be >= 2");
      }
      if (problem.n_datasets == 0) {
        throw ConfigError("config key 'problem.n_datasets' must be >= 1");
      }
      if (problem.block < 2 || (problem.block & (problem.block - 1)) != 0) {
        throw ConfigError(
            "config key 'problem.block' must be a power of two >= 2");
      }
      if (problem.bandwidth_limit < 0.0 || problem.bandwidth_limit > 1.0) {
        throw ConfigError(
            "config key 'problem.bandwidth_limit' must be in [0, 1]");
      }
      break;
    }
    case ExperimentKind::Flower:
      if (problem.samples < 8) {
        throw ConfigError("config key 'problem.samples' must be >= 8");
      }
      if (problem.petals == 0) {
        throw ConfigError("config key 'problem.petals' must be >= 1");
      }
      if (problem.block == 0 || problem.block > emulator.max_vector_len) {
        throw ConfigError(
            "config key 'problem.block' must be in [1, max_vector_len]");
      }
      break;
    case ExperimentKind::MnistReal:
    case ExperimentKind::MnistComplex:
      if (problem.subset == 0) {
        throw ConfigError("config key 'problem.subset' must be >= 1");
      }
      if (backend != BackendKind::Exact && backend != BackendKind::Analog) {
        throw ConfigError(
            "mnist experiments support only exact or analog backends");
      }
      break;
    case ExperimentKind::BitsliceDemo:
      if (problem.demo_size == 0 || problem.demo_size > 512) {
        throw ConfigError("config key 'problem.size' must be in [1, 512]");
      }
      break;
  }
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  switch (kind) {
    case ExperimentKind::Charge:
      cfg.backend = BackendKind::Analog;
      // The charge run encodes with amplitude-only modulation at full DAC
      // depth; the 6-bit figure of merit is the noise-equivalent precision
      // of the sigma=4% readout channel, not the encoder word length.
      cfg.emulator.bits = 12;
      cfg.emulator.sigma = 0.04;
      cfg.emulator.mode = EncodingMode::RealOnly;
      cfg.problem.wire_radius = 1e-4;
      cfg.solver.inner_kind = InnerKind::Pcg;
      cfg.solver.inner_tol = 0.01;
      cfg.solver.outer_tol = 1e-3;
      break;
    case ExperimentKind::Efie:
      cfg.backend = BackendKind::Split;
      cfg.split_inner = BackendKind::Analog;
      cfg.emulator.bits = 8;
      cfg.emulator.sigma = 0.0078;
      cfg.solver.inner_kind = InnerKind::Gmres;
      cfg.solver.inner_tol = 0.1;
      cfg.solver.outer_tol = 1e-3;
      break;
    case ExperimentKind::GliderSynthetic:
      cfg.backend = BackendKind::Split;
      cfg.split_inner = BackendKind::Bitsliced;
      cfg.emulator.bits = 8;
      cfg.emulator.sigma = 0.0078;
      cfg.solver.inner_kind = InnerKind::Gmres;
      cfg.solver.inner_tol = 0.1;
      cfg.solver.outer_tol = 1e-3;
      break;
    case ExperimentKind::Equalize:
      cfg.backend = BackendKind::Exact;  // unused; echoed for completeness
      break;
    case ExperimentKind::Flower:
      cfg.backend = BackendKind::Analog;
      cfg.preset = "10msps";
      cfg.emulator.bits = 12;
      cfg.emulator.sigma = 0.0039;
      cfg.problem.block = 512;
      break;
    case ExperimentKind::MnistComplex:
      cfg.backend = BackendKind::Analog;
      cfg.emulator.bits = 12;
      cfg.emulator.sigma = 0.017;
      cfg.problem.subset = 1000;
      break;
    case ExperimentKind::MnistReal:
      cfg.backend = BackendKind::Analog;
      cfg.emulator.bits = 12;
      cfg.emulator.sigma = 0.04;
      cfg.emulator.mode = EncodingMode::RealOnly;
      cfg.problem.subset = 102;
      break;
    case ExperimentKind::BitsliceDemo:
      cfg.backend = BackendKind::Exact;
      break;
  }
  return cfg;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  require_keys(j, "",
               {"experiment", "seed", "backend", "solver", "problem",
                "output"});
  const json* exp = find(j, "experiment");
  if (exp == nullptr || !exp->is_string()) {
    throw ConfigError("config key 'experiment' (string) is required");
  }
  ExperimentConfig cfg =
      default_config(experiment_from_string(exp->get<std::string>()));
  read_number(j, "", "seed", &cfg.seed);

  if (const json* b = find(j, "backend")) {
    if (!b->is_object()) throw ConfigError("config key 'backend' must be an object");
    require_keys(*b, "backend",
                 {"kind", "inner", "preset", "bits", "sigma", "mode",
                  "max_vector_len"});
    std::string kind = to_string(cfg.backend);
    read_string(*b, "backend", "kind", &kind);
    cfg.backend = backend_from_string(kind);
    std::string inner = to_string(cfg.split_inner);
    read_string(*b, "backend", "inner", &inner);
    cfg.split_inner = backend_from_string(inner);
    read_string(*b, "backend", "preset", &cfg.preset);
    read_number(*b, "backend", "bits", &cfg.emulator.bits);
    if (find(*b, "sigma") != nullptr) {
      // An explicit sigma overrides the experiment default; a preset (if
      // also given) wins at finalize time.
      read_number(*b, "backend", "sigma", &cfg.emulator.sigma);
    }
    if (const json* m = find(*b, "mode")) {
      if (!m->is_string()) {
        throw ConfigError("config key 'backend.mode' must be a string");
      }
      const std::string mode = m->get<std::string>();
      if (mode == "complex") {
        cfg.emulator.mode = EncodingMode::Complex;
      } else if (mode == "real") {
        cfg.emulator.mode = EncodingMode::RealOnly;
      } else {
        throw ConfigError("config key 'backend.mode' must be 'complex' or 'real'");
      }
    }
    read_number(*b, "backend", "max_vector_len", &cfg.emulator.max_vector_len);
  }

  if (const json* s = find(j, "solver")) {
    if (!s->is_object()) throw ConfigError("config key 'solver' must be an object");
    require_keys(*s, "solver",
                 {"inner", "outer_tol", "inner_tol", "max_outer", "max_inner",
                  "jacobi"});
    if (const json* inner = find(*s, "inner")) {
      if (!inner->is_string()) {
        throw ConfigError("config key 'solver.inner' must be a string");
      }
      const std::string name = inner->get<std::string>();
      if (name == "pcg") {
        cfg.solver.inner_kind = InnerKind::Pcg;
      } else if (name == "gmres") {
        cfg.solver.inner_kind = InnerKind::Gmres;
      } else {
        throw ConfigError("config key 'solver.inner' must be 'pcg' or 'gmres'");
      }
    }
    read_number(*s, "solver", "outer_tol", &cfg.solver.outer_tol);
    read_number(*s, "solver", "inner_tol", &cfg.solver.inner_tol);
    read_number(*s, "solver", "max_outer", &cfg.solver.max_outer);
    read_number(*s, "solver", "max_inner", &cfg.solver.max_inner);
    read_flag(*s, "solver", "jacobi", &cfg.solver.jacobi);
  }

  if (const json* p = find(j, "problem")) {
    if (!p->is_object()) throw ConfigError("config key 'problem' must be an object");
    switch (cfg.experiment) {
      case ExperimentKind::Charge:
        require_keys(*p, "problem", {"segments", "length", "radius", "potential"});
        read_number(*p, "problem", "segments", &cfg.problem.segments);
        read_number(*p, "problem", "length", &cfg.problem.length);
        read_number(*p, "problem", "radius", &cfg.problem.wire_radius);
        read_number(*p, "problem", "potential", &cfg.problem.potential);
        break;
      case ExperimentKind::Efie:
        require_keys(*p, "problem",
                     {"match_points", "half_length", "radius",
                      "band_halfwidth"});
        read_number(*p, "problem", "match_points", &cfg.problem.match_points);
        read_number(*p, "problem", "half_length", &cfg.problem.half_length);
        read_number(*p, "problem", "radius", &cfg.problem.efie_radius);
        read_number(*p, "problem", "band_halfwidth",
                    &cfg.problem.band_halfwidth);
        break;
      case ExperimentKind::GliderSynthetic:
        require_keys(*p, "problem",
                     {"size", "dynamic_range_db", "band_width",
                      "outlier_fraction"});
        read_number(*p, "problem", "size", &cfg.problem.size);
        read_number(*p, "problem", "dynamic_range_db",
                    &cfg.problem.dynamic_range_db);
        read_number(*p, "problem", "band_width", &cfg.problem.band_width);
        read_number(*p, "problem", "outlier_fraction",
                    &cfg.problem.outlier_fraction);
        break;
      case ExperimentKind::Equalize:
        require_keys(*p, "problem",
                     {"payload_length", "n_datasets", "block",
                      "bandwidth_limit"});
        read_number(*p, "problem", "payload_length",
                    &cfg.problem.payload_length);
        read_number(*p, "problem", "n_datasets", &cfg.problem.n_datasets);
        read_number(*p, "problem", "block", &cfg.problem.block);
        read_number(*p, "problem", "bandwidth_limit",
                    &cfg.problem.bandwidth_limit);
        break;
      case ExperimentKind::Flower:
        require_keys(*p, "problem", {"samples", "petals", "block"});
        read_number(*p, "problem", "samples", &cfg.problem.samples);
        read_number(*p, "problem", "petals", &cfg.problem.petals);
        read_number(*p, "problem", "block", &cfg.problem.block);
        break;
      case ExperimentKind::MnistReal:
      case ExperimentKind::MnistComplex:
        require_keys(*p, "problem", {"data_dir", "weights", "subset"});
        read_string(*p, "problem", "data_dir", &cfg.problem.data_dir);
        read_string(*p, "problem", "weights", &cfg.problem.weights);
        read_number(*p, "problem", "subset", &cfg.problem.subset);
        break;
      case ExperimentKind::BitsliceDemo:
        require_keys(*p, "problem", {"size"});
        read_number(*p, "problem", "size", &cfg.problem.demo_size);
        break;
    }
  }

  if (const json* o = find(j, "output")) {
    if (!o->is_object()) throw ConfigError("config key 'output' must be an object");
    require_keys(*o, "output", {"directory", "report", "prefix"});
    read_string(*o, "output", "directory", &cfg.output.directory);
    read_string(*o, "output", "report", &cfg.output.report);
    read_string(*o, "output", "prefix", &cfg.output.prefix);
  }

  cfg.finalize();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " +
                      e.what());
  }
  return parse_config(j);
}

nlohmann::json config_json(const ExperimentConfig& cfg) {
  json problem;
  switch (cfg.experiment) {
    case ExperimentKind::Charge:
      problem = json{{"segments", cfg.problem.segments},
                     {"length", cfg.problem.length},
                     {"radius", cfg.problem.wire_radius},
                     {"potential", cfg.problem.potential}};
      break;
    case ExperimentKind::Efie:
      problem = json{{"match_points", cfg.problem.match_points},
                     {"half_length", cfg.problem.half_length},
                     {"radius", cfg.problem.efie_radius},
                     {"band_halfwidth", cfg.problem.band_halfwidth}};
      break;
    case ExperimentKind::GliderSynthetic:
      problem = json{{"size", cfg.problem.size},
                     {"dynamic_range_db", cfg.problem.dynamic_range_db},
                     {"band_width", cfg.problem.band_width},
                     {"outlier_fraction", cfg.problem.outlier_fraction}};
      break;
    case ExperimentKind::Equalize:
      problem = json{{"payload_length", cfg.problem.payload_length},
                     {"n_datasets", cfg.problem.n_datasets},
                     {"block", cfg.problem.block},
                     {"bandwidth_limit", cfg.problem.bandwidth_limit}};
      break;
    case ExperimentKind::Flower:
      problem = json{{"samples", cfg.problem.samples},
                     {"petals", cfg.problem.petals},
                     {"block", cfg.problem.block}};
      break;
    case ExperimentKind::MnistReal:
    case ExperimentKind::MnistComplex:
      problem = json{{"data_dir", cfg.problem.data_dir},
                     {"weights", cfg.problem.weights},
                     {"subset", cfg.problem.subset}};
      break;
    case ExperimentKind::BitsliceDemo:
      problem = json{{"size", cfg.problem.demo_size}};
      break;
  }

  return json{
      {"experiment", to_string(cfg.experiment)},
      {"seed", cfg.seed},
      {"backend",
       json{{"kind", to_string(cfg.backend)},
            {"inner", to_string(cfg.split_inner)},
            {"preset", cfg.preset},
            {"bits", cfg.emulator.bits},
            {"sigma", cfg.emulator.sigma},
            {"mode",
             cfg.emulator.mode == EncodingMode::Complex ? "complex" : "real"},
            {"max_vector_len", cfg.emulator.max_vector_len}}},
      {"solver",
       json{{"inner",
             cfg.solver.inner_kind == InnerKind::Pcg ? "pcg" : "gmres"},
            {"outer_tol", cfg.solver.outer_tol},
            {"inner_tol", cfg.solver.inner_tol},
            {"max_outer", cfg.solver.max_outer},
            {"max_inner", cfg.solver.max_inner},
            {"jacobi", cfg.solver.jacobi}}},
      {"problem", std::move(problem)},
      {"output",
       json{{"directory", cfg.output.directory},
            {"report", cfg.output.report},
            {"prefix", cfg.output.prefix}}}};
}

RunReport run(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  cfg.finalize();

  RunReport report;
  report.config = cfg;
  const auto t0 = std::chrono::steady_clock::now();
  switch (cfg.experiment) {
    case ExperimentKind::Charge:
      report.results = run_charge(cfg);
      break;
    case ExperimentKind::Efie:
      report.results = run_efie(cfg);
      break;
    case ExperimentKind::GliderSynthetic:
      report.results = run_glider(cfg);
      break;
    case ExperimentKind::Equalize:
      report.results = run_equalize(cfg);
      break;
    case ExperimentKind::Flower:
      report.results = run_flower(cfg);
      break;
    case ExperimentKind::MnistComplex:
      report.results = run_mnist<ComplexMLP>(cfg, "mnist-complex",
                                             "mnist_complex.howt",
                                             &load_complex_mlp,
                                             &evaluate_complex);
      break;
    case ExperimentKind::MnistReal:
      report.results = run_mnist<RealSingleLayer>(cfg, "mnist-real",
                                                  "mnist_real.howt",
                                                  &load_real_single_layer,
                                                  &evaluate_real);
      break;
    case ExperimentKind::BitsliceDemo:
      report.results = run_bitslice_demo(cfg);
      break;
  }
  const auto t1 = std::chrono::steady_clock::now();
  report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  return report;
}

nlohmann::json report_json(const RunReport& report) {
  return json{{"config", config_json(report.config)},
              {"results", report.results},
              {"wall_seconds", report.wall_seconds},
              {"version", report.version}};
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot write CSV file: " + path);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << csv_escape(cells[i]);
    }
    out_ << "\r\n";
  }

  void close() {
    out_.close();
    if (!out_) throw IoError("write failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

std::string out_path(const RunReport& report, const std::string& stem) {
  return report.config.output.directory + "/" + report.config.output.prefix +
         stem;
}

void emit_trace_csv(const json& results, const std::string& path,
                    std::vector<std::string>* written) {
  CsvWriter csv(path);
  csv.row({"outer_iter", "residual", "inner_iters", "digital_mvms",
           "analog_mvms"});
  for (const json& r : results.at("trace")) {
    csv.row({std::to_string(r.at("outer_iter").get<std::size_t>()),
             csv_double(r.at("residual").get<double>()),
             std::to_string(r.at("inner_iters").get<std::size_t>()),
             std::to_string(r.at("digital_mvms").get<std::size_t>()),
             std::to_string(r.at("analog_mvms").get<std::size_t>())});
  }
  csv.close();
  written->push_back(path);
}

void emit_solution_csv(const json& results, const std::string& path,
                       std::vector<std::string>* written) {
  CsvWriter csv(path);
  csv.row({"index", "truth_re", "truth_im", "solved_re", "solved_im"});
  const json& truth = results.at("truth");
  const json& sol = results.at("solution");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    csv.row({std::to_string(i), csv_double(truth[i][0].get<double>()),
             csv_double(truth[i][1].get<double>()),
             csv_double(sol[i][0].get<double>()),
             csv_double(sol[i][1].get<double>())});
  }
  csv.close();
  written->push_back(path);
}

void emit_confusion_csv(const json& confusion, const std::string& path,
                        std::vector<std::string>* written) {
  CsvWriter csv(path);
  std::vector<std::string> header{"true_label"};
  for (std::size_t c = 0; c < kMnistClasses; ++c) {
    header.push_back("pred_" + std::to_string(c));
  }
  csv.row(header);
  for (std::size_t r = 0; r < confusion.size(); ++r) {
    std::vector<std::string> cells{std::to_string(r)};
    for (const json& v : confusion[r]) cells.push_back(csv_double(v.get<double>()));
    csv.row(cells);
  }
  csv.close();
  written->push_back(path);
}

}  // namespace

std::vector<std::string> emit_plot_data(const RunReport& report) {
  std::vector<std::string> written;
  const json& res = report.results;
  const std::string exp = to_string(report.config.experiment);

  switch (report.config.experiment) {
    case ExperimentKind::Charge:
    case ExperimentKind::Efie:
      emit_trace_csv(res, out_path(report, exp + "_residual.csv"), &written);
      emit_solution_csv(res, out_path(report, exp + "_solution.csv"),
                        &written);
      break;
    case ExperimentKind::GliderSynthetic:
      emit_trace_csv(res.at("plain8"),
                     out_path(report, exp + "_plain8_residual.csv"),
                     &written);
      emit_trace_csv(res.at("split_sliced"),
                     out_path(report, exp + "_split_sliced_residual.csv"),
                     &written);
      emit_solution_csv(res.at("split_sliced"),
                        out_path(report, exp + "_solution.csv"), &written);
      break;
    case ExperimentKind::Equalize: {
      {
        CsvWriter csv(out_path(report, "equalize_spectra.csv"));
        csv.row({"bin", "h_mag", "input", "before", "after"});
        const json& h = res.at("h_mag");
        const json& si = res.at("spectrum_input");
        const json& sb = res.at("spectrum_before");
        const json& sa = res.at("spectrum_after");
        for (std::size_t k = 0; k < h.size(); ++k) {
          csv.row({std::to_string(k), csv_double(h[k].get<double>()),
                   csv_double(si[k].get<double>()),
                   csv_double(sb[k].get<double>()),
                   csv_double(sa[k].get<double>())});
        }
        csv.close();
        written.push_back(out_path(report, "equalize_spectra.csv"));
      }
      {
        CsvWriter csv(out_path(report, "equalize_histogram.csv"));
        csv.row({"bin_lo", "bin_hi", "count_before", "count_after"});
        const json& hist = res.at("histogram");
        const double lo = hist.at("lo").get<double>();
        const double hi = hist.at("hi").get<double>();
        const json& cb = hist.at("counts_before");
        const json& ca = hist.at("counts_after");
        const double width = (hi - lo) / static_cast<double>(cb.size());
        for (std::size_t k = 0; k < cb.size(); ++k) {
          csv.row({csv_double(lo + width * static_cast<double>(k)),
                   csv_double(lo + width * static_cast<double>(k + 1)),
                   std::to_string(cb[k].get<std::int64_t>()),
                   std::to_string(ca[k].get<std::int64_t>())});
        }
        csv.close();
        written.push_back(out_path(report, "equalize_histogram.csv"));
      }
      break;
    }
    case ExperimentKind::Flower: {
      CsvWriter csv(out_path(report, "flower_samples.csv"));
      csv.row({"index", "in_re", "in_im", "out_re", "out_im"});
      const json& samples = res.at("samples");
      for (std::size_t i = 0; i < samples.size(); ++i) {
        csv.row({std::to_string(i), csv_double(samples[i][0].get<double>()),
                 csv_double(samples[i][1].get<double>()),
                 csv_double(samples[i][2].get<double>()),
                 csv_double(samples[i][3].get<double>())});
      }
      csv.close();
      written.push_back(out_path(report, "flower_samples.csv"));
      break;
    }
    case ExperimentKind::MnistReal:
    case ExperimentKind::MnistComplex:
      emit_confusion_csv(res.at("confusion_digital"),
                         out_path(report, exp + "_confusion_digital.csv"),
                         &written);
      emit_confusion_csv(res.at("confusion_analog"),
                         out_path(report, exp + "_confusion_analog.csv"),
                         &written);
      break;
    case ExperimentKind::BitsliceDemo:
      break;  // scalar demo; everything of interest is in the report
  }
  return written;
}

std::string write_report(const RunReport& report) {
  const std::string name =
      report.config.output.report.empty()
          ? report.config.output.prefix + to_string(report.config.experiment) +
                "_report.json"
          : report.config.output.report;
  const std::string path = report.config.output.directory + "/" + name;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write report file: " + path);
  out << report_json(report).dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
  return path;
}

namespace {

void flatten(const json& j, const std::string& prefix,
             std::map<std::string, double>* out) {
  if (j.is_object()) {
    for (const auto& item : j.items()) {
      flatten(item.value(),
              prefix.empty() ? item.key() : prefix + "." + item.key(), out);
    }
  } else if (j.is_boolean()) {
    (*out)[prefix] = j.get<bool>() ? 1.0 : 0.0;
  } else if (j.is_number()) {
    (*out)[prefix] = j.get<double>();
  }
  // strings and arrays are not scalar metrics
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::map<std::string, double> summarize(const RunReport& report) {
  std::map<std::string, double> out;
  flatten(report.results, "", &out);
  return out;
}

SweepResult sweep(const ExperimentConfig& base, std::size_t n_seeds) {
  if (n_seeds == 0) throw ConfigError("sweep requires at least one seed");
  SweepResult result;
  json rows = json::array();
  for (std::size_t k = 0; k < n_seeds; ++k) {
    ExperimentConfig cfg = base;
    cfg.seed = derive_seed(base.seed, k);
    const RunReport rep = run(cfg);
    result.seeds.push_back(cfg.seed);
    result.rows.push_back(summarize(rep));
    json row{{"seed", cfg.seed}};
    for (const auto& [key, value] : result.rows.back()) row[key] = value;
    rows.push_back(std::move(row));
  }

  json mean = json::object();
  json median = json::object();
  for (const auto& [key, unused] : result.rows.front()) {
    std::vector<double> values;
    values.reserve(result.rows.size());
    bool everywhere = true;
    for (const auto& row : result.rows) {
      auto it = row.find(key);
      if (it == row.end()) {
        everywhere = false;
        break;
      }
      values.push_back(it->second);
    }
    if (!everywhere) continue;
    double sum = 0.0;
    for (double v : values) sum += v;
    mean[key] = sum / static_cast<double>(values.size());
    median[key] = median_of(values);
  }

  result.merged = json{{"experiment", to_string(base.experiment)},
                       {"base_seed", base.seed},
                       {"n_seeds", n_seeds},
                       {"rows", std::move(rows)},
                       {"mean", std::move(mean)},
                       {"median", std::move(median)}};
  return result;
}

}  // namespace homodyne
