#include "cfreg/cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfreg/bench.hpp"
#include "cfreg/clustering.hpp"
#include "cfreg/error.hpp"
#include "cfreg/eval.hpp"
#include "cfreg/io.hpp"
#include "cfreg/kernels.hpp"
#include "cfreg/lowrank.hpp"
#include "cfreg/solver.hpp"

namespace cfreg {
namespace {

using Index = Eigen::Index;

constexpr const char* kExitCodeHelp =
    "Exit codes: 0 success (also when registration hits max-iters), 1 internal error,\n"
    "2 usage error, 3 file error (I/O, parse, format), 4 invalid input,\n"
    "5 numerical failure, 6 unsupported kernel.";

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt_seconds(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 3);
  return std::string(buf, ptr);
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError:
    case ErrorKind::ParseError:
    case ErrorKind::MixedDimensions:
    case ErrorKind::UnsupportedFormat:
    case ErrorKind::UnsupportedDimension:
      return kExitIo;
    case ErrorKind::DegenerateInput:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidK:
    case ErrorKind::EmptyCorrespondence:
      return kExitInvalidInput;
    case ErrorKind::SingularSystem:
      return kExitNumerical;
    case ErrorKind::UnsupportedKernel:
      return kExitUnsupported;
  }
  return kExitInternal;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T value{};
  if (!CLI::detail::lexical_cast(text, value)) {
    throw Error(ErrorKind::InvalidArgument, "config key '" + key + "' has bad value '" + text + "'");
  }
  return value;
}

/// Solver flags shared by `register` and `bench`, with the optional
/// key=value config file. Command-line flags take precedence over the file.
struct SolverFlags {
  RegistrationConfig cfg;
  std::string kernel = "laplacian";
  std::string config_path;
  std::map<std::string, std::pair<CLI::Option*, std::function<void(const std::string&)>>> keys;

  void attach(CLI::App* app, bool kernel_flags) {
    auto add = [&](const std::string& name, auto& target, const std::string& help) {
      using T = std::remove_reference_t<decltype(target)>;
      CLI::Option* opt = app->add_option("--" + name, target, help)->capture_default_str();
      keys[name] = {opt, [&target, name](const std::string& text) { target = parse_value<T>(name, text); }};
    };
    add("lambda", cfg.lambda, "Entropy regularization weight");
    add("zeta", cfg.zeta, "Tikhonov trade-off");
    add("ratio", cfg.approx_ratio, "Nystrom landmark fraction in (0, 1]; 1 uses the exact Gram matrix");
    add("max-iters", cfg.max_iters, "Iteration cap");
    add("tol", cfg.tol, "Relative sigma^2 change that stops the loop");
    add("seed", cfg.seed, "Seed for k-means++ landmark initialization");
    if (kernel_flags) {
      add("gamma", cfg.kernel.gamma, "Kernel bandwidth");
      add("kernel", kernel, "Kernel family: laplacian or gaussian");
    }
    app->add_option("--config", config_path, "Plain-text file of key=value lines overriding defaults");
  }

  void finalize() {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error(ErrorKind::IoError, "cannot open config file '" + config_path + "'");
      std::string line;
      for (size_t number = 1; std::getline(in, line); ++number) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
          throw Error(ErrorKind::ParseError, config_path + ":" + std::to_string(number) + ": expected key=value");
        }
        auto strip = [](std::string s) {
          const auto b = s.find_first_not_of(" \t\r");
          const auto e = s.find_last_not_of(" \t\r");
          return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        const auto it = keys.find(key);
        if (it == keys.end()) {
          throw Error(ErrorKind::InvalidArgument, config_path + ":" + std::to_string(number) +
                                                      ": unknown key '" + key + "'");
        }
        if (it->second.first->count() == 0) it->second.second(value);
      }
    }
    cfg.kernel.family = parse_kernel_family(kernel);
    cfg.validate();
  }
};

std::optional<FileFormat> format_override(const std::string& name) {
  if (name.empty()) return std::nullopt;
  return parse_format(name);
}

PointSet builtin_shape(const std::string& shape, Index count) {
  if (shape == "ring") return make_ring(count);
  if (shape == "grid") return make_grid(count);
  if (shape == "sphere") return make_sphere(count);
  throw Error(ErrorKind::InvalidArgument, "unknown shape '" + shape + "' (ring, grid, sphere)");
}

Correspondence pairing_for(const PointSet& deformed, const PointSet& target, const std::string& pairs_path,
                           bool nn) {
  if (!pairs_path.empty()) return read_pairs(pairs_path);
  if (nn || deformed.size() != target.size()) return nearest_neighbor_pairs(deformed, target);
  return identity_pairs(deformed, target);
}

void emit(std::ostream& out, const std::string& path, const std::string& content) {
  if (path.empty()) {
    out << content;
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  file << content;
  if (!file) throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Correspondence-free non-rigid point set registration", "cfreg"};
  app.require_subcommand(1);
  app.footer(kExitCodeHelp);
  std::string format;

  // register
  auto* reg = app.add_subcommand("register", "Deform a source point set onto a target");
  std::string reg_source, reg_target, reg_out, reg_pairs;
  bool reg_nn = false;
  SolverFlags reg_flags;
  reg->add_option("source", reg_source, "Source point file")->required();
  reg->add_option("target", reg_target, "Target point file")->required();
  reg->add_option("-o,--out", reg_out, "Output file for the deformed source")->required();
  reg->add_option("--pairs", reg_pairs, "Ground-truth pairing file for the RMSE summary");
  reg->add_flag("--nn", reg_nn, "Use nearest-neighbour pairing for the RMSE summary");
  reg->add_option("--format", format, "Override the file format (xyz, csv, ply)");
  reg_flags.attach(reg, true);
  reg->footer(kExitCodeHelp);

  // synth
  auto* syn = app.add_subcommand("synth", "Generate a synthetic-warp source/target pair");
  std::string syn_shape = "ring", syn_base, syn_source, syn_target, syn_pairs;
  Index syn_points = 500;
  double syn_magnitude = 0.3, syn_bandwidth = 2.0, syn_noise = 0.0, syn_occlusion = 0.0;
  std::uint64_t syn_seed = 0;
  syn->add_option("--shape", syn_shape, "Built-in shape: ring, grid or sphere")->capture_default_str();
  syn->add_option("--base", syn_base, "Base point file instead of a built-in shape (normalized first)");
  syn->add_option("--points", syn_points, "Point count for built-in shapes")->capture_default_str();
  syn->add_option("--magnitude", syn_magnitude, "Largest displacement, normalized units")->capture_default_str();
  syn->add_option("--bandwidth", syn_bandwidth, "Width of the random RBF bumps")->capture_default_str();
  syn->add_option("--noise", syn_noise, "Gaussian noise sigma added to the source")->capture_default_str();
  syn->add_option("--occlusion", syn_occlusion, "Fraction of source points removed")->capture_default_str();
  syn->add_option("--seed", syn_seed, "Random seed")->capture_default_str();
  syn->add_option("--source-out", syn_source, "Output source file")->required();
  syn->add_option("--target-out", syn_target, "Output target file")->required();
  syn->add_option("--pairs-out", syn_pairs, "Output pairing file (source index, target index)")->required();
  syn->add_option("--format", format, "Override the file format (xyz, csv, ply)");
  syn->footer(kExitCodeHelp);

  // eval
  auto* evl = app.add_subcommand("eval", "RMSE between a deformed set and a target");
  std::string ev_deformed, ev_target, ev_pairs;
  bool ev_nn = false;
  evl->add_option("deformed", ev_deformed, "Deformed point file")->required();
  evl->add_option("target", ev_target, "Target point file")->required();
  evl->add_option("pairs", ev_pairs, "Pairing file; index identity when omitted");
  evl->add_flag("--nn", ev_nn, "Pair every deformed point with its nearest target point");
  evl->add_option("--format", format, "Override the file format (xyz, csv, ply)");
  evl->footer(kExitCodeHelp);

  // kmeans
  auto* km = app.add_subcommand("kmeans", "Elkan k-means on a point file");
  std::string km_input, km_centroids;
  Index km_k = 0;
  std::uint64_t km_seed = 0;
  int km_iters = 100;
  km->add_option("input", km_input, "Point file")->required();
  km->add_option("-k,--k", km_k, "Number of clusters")->required();
  km->add_option("--seed", km_seed, "k-means++ seed")->capture_default_str();
  km->add_option("--max-iters", km_iters, "Iteration cap")->capture_default_str();
  km->add_option("--centroids", km_centroids, "Optional output file for the centroids");
  km->add_option("--format", format, "Override the file format (xyz, csv, ply)");
  km->footer(kExitCodeHelp);

  // nystrom-audit
  auto* aud = app.add_subcommand("nystrom-audit", "Clustered vs random Nystrom error and its bound");
  std::string aud_input, aud_out;
  std::vector<double> aud_ratios{0.02, 0.1, 0.2, 0.4};
  std::vector<std::uint64_t> aud_seeds{0};
  double aud_gamma = 2.0;
  bool aud_no_timing = false;
  aud->add_option("input", aud_input, "Point file (normalized before the audit)")->required();
  aud->add_option("--ratios", aud_ratios, "Comma-separated landmark ratios")->delimiter(',')->capture_default_str();
  aud->add_option("--seeds", aud_seeds, "Comma-separated seeds")->delimiter(',')->capture_default_str();
  aud->add_option("--gamma", aud_gamma, "Laplacian kernel bandwidth")->capture_default_str();
  aud->add_option("--out", aud_out, "Write the CSV here instead of standard output");
  aud->add_flag("--no-timing", aud_no_timing, "Write 0 in the seconds column");
  aud->add_option("--format", format, "Override the file format (xyz, csv, ply)");
  aud->footer(kExitCodeHelp);

  // bench
  auto* ben = app.add_subcommand("bench", "Noise/occlusion x kernel robustness grid");
  BenchGrid grid;
  std::string ben_shape = "ring", ben_base, ben_out;
  Index ben_points = 500;
  std::vector<std::string> ben_kernels{"laplacian", "gaussian"};
  bool ben_no_timing = false;
  SolverFlags ben_flags;
  ben->add_option("--experiment", grid.experiment, "Experiment label for the CSV")->capture_default_str();
  ben->add_option("--shape", ben_shape, "Built-in shape: ring, grid or sphere")->capture_default_str();
  ben->add_option("--base", ben_base, "Base point file instead of a built-in shape (normalized first)");
  ben->add_option("--points", ben_points, "Point count for built-in shapes")->capture_default_str();
  ben->add_option("--magnitude", grid.magnitude, "Warp magnitude")->capture_default_str();
  ben->add_option("--bandwidth", grid.bandwidth, "Warp bump width")->capture_default_str();
  ben->add_option("--kernel", ben_kernels, "Comma-separated kernel families")->delimiter(',')->capture_default_str();
  ben->add_option("--gamma", grid.gammas, "Comma-separated kernel bandwidths")->delimiter(',')->capture_default_str();
  ben->add_option("--noise", grid.noise_sigmas, "Comma-separated noise sigmas")->delimiter(',')->capture_default_str();
  ben->add_option("--occlusion", grid.occlusions, "Comma-separated occlusion fractions")->delimiter(',')->capture_default_str();
  ben->add_option("--seeds", grid.seeds, "Comma-separated fixture seeds")->delimiter(',')->capture_default_str();
  ben->add_option("--out", ben_out, "Write the CSV here instead of standard output");
  ben->add_flag("--no-timing", ben_no_timing, "Write 0 in the seconds column");
  ben_flags.attach(ben, false);
  ben->footer(kExitCodeHelp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto fmt_override = format_override(format);

    if (*reg) {
      reg_flags.finalize();
      const PointSet source = read_points(reg_source, fmt_override);
      const PointSet target = read_points(reg_target, fmt_override);
      const RegistrationResult result = register_point_sets(source, target, reg_flags.cfg);
      write_points(result.deformed, reg_out, fmt_override);
      const Correspondence before = pairing_for(source, target, reg_pairs, reg_nn);
      const Correspondence after = pairing_for(result.deformed, target, reg_pairs, reg_nn);
      out << "rmse_pre=" << fmt(rmse(source, target, before))
          << " rmse_post=" << fmt(rmse(result.deformed, target, after)) << " iters=" << result.iterations
          << " sigma2=" << fmt(result.sigma2_trace.empty() ? 0.0 : result.sigma2_trace.back())
          << " seconds=" << fmt_seconds(result.wall_time) << '\n';
      return kExitOk;
    }

    if (*syn) {
      const PointSet base = syn_base.empty() ? builtin_shape(syn_shape, syn_points)
                                             : normalize(read_points(syn_base, fmt_override));
      const SyntheticWarp warp = synthetic_warp(base, syn_magnitude, syn_bandwidth, syn_seed);
      const PointSet noisy = add_noise(base, syn_noise, syn_seed ^ 0x9e3779b97f4a7c15ULL);
      const Occlusion occluded = occlude(noisy, syn_occlusion, syn_seed ^ 0xbf58476d1ce4e5b9ULL);
      Correspondence pairs;
      for (size_t k = 0; k < occluded.kept_indices.size(); ++k) {
        pairs.pairs.emplace_back(static_cast<Index>(k), occluded.kept_indices[k]);
      }
      write_points(occluded.kept, syn_source, fmt_override);
      write_points(warp.warped, syn_target, fmt_override);
      write_pairs(pairs, syn_pairs);
      return kExitOk;
    }

    if (*evl) {
      const PointSet deformed = read_points(ev_deformed, fmt_override);
      const PointSet target = read_points(ev_target, fmt_override);
      const Correspondence corr = pairing_for(deformed, target, ev_pairs, ev_nn);
      out << "rmse=" << fmt(rmse(deformed, target, corr)) << '\n';
      return kExitOk;
    }

    if (*km) {
      const PointSet pts = read_points(km_input, fmt_override);
      const KMeansResult result = kmeans_elkan(pts, km_k, km_seed, km_iters);
      if (!km_centroids.empty()) write_points(PointSet(result.centroids), km_centroids, fmt_override);
      out << "q=" << fmt(result.quantization_error) << " T=" << result.max_cluster_size
          << " iterations=" << result.iterations << " converged=" << (result.converged ? 1 : 0)
          << " distance_evaluations=" << result.distance_evaluations << '\n';
      return kExitOk;
    }

    if (*aud) {
      const PointSet pts = normalize(read_points(aud_input, fmt_override));
      const KernelSpec spec{KernelFamily::Laplacian, aud_gamma};
      const Eigen::MatrixXd gram = gram_matrix(spec, pts);
      std::ostringstream csv;
      csv << "ratio,seed,epsilon_clustered,epsilon_random,bound,slack,seconds\n";
      for (const double ratio : aud_ratios) {
        for (const std::uint64_t seed : aud_seeds) {
          const auto start = std::chrono::steady_clock::now();
          const BoundReport report = audit_bound(spec, pts, ratio, seed);
          const double seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          const NystromFactor random_factor = build_nystrom_from_landmarks(
              spec, pts, random_landmarks(pts, landmark_count(pts.size(), ratio), seed));
          csv << fmt(ratio) << ',' << seed << ',' << fmt(report.epsilon) << ','
              << fmt(approximation_error(gram, random_factor)) << ',' << fmt(report.bound) << ','
              << fmt(report.slack) << ',' << fmt(aud_no_timing ? 0.0 : seconds) << '\n';
        }
      }
      emit(out, aud_out, csv.str());
      return kExitOk;
    }

    if (*ben) {
      ben_flags.finalize();
      grid.base_config = ben_flags.cfg;
      grid.kernels.clear();
      for (const auto& name : ben_kernels) grid.kernels.push_back(parse_kernel_family(name));
      const PointSet base = ben_base.empty() ? builtin_shape(ben_shape, ben_points)
                                             : normalize(read_points(ben_base, fmt_override));
      const std::vector<BenchRow> rows = run_bench(base, grid);
      std::ostringstream csv;
      write_bench_csv(csv, rows, !ben_no_timing);
      emit(out, ben_out, csv.str());
      for (const KernelFamily kernel : grid.kernels) {
        err << "mean_rmse_post[" << to_string(kernel) << "]=" << fmt(mean_rmse_post(rows, kernel)) << '\n';
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "cfreg: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "cfreg: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace cfreg
