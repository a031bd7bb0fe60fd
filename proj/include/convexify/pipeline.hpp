#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "convexify/config.hpp"
#include "convexify/convexifier.hpp"
#include "convexify/data_prep.hpp"
#include "convexify/forward_sim.hpp"
#include "convexify/reconstructor.hpp"
#include "convexify/tail_solver.hpp"

namespace convexify {

/// File names written by the commands, relative to the output directory.
namespace files {
inline constexpr const char* kDataset = "dataset.txt";
inline constexpr const char* kDatasetClean = "dataset_clean.txt";
inline constexpr const char* kExactTail = "exact_tail.field";
inline constexpr const char* kExactCoefficient = "exact_coefficient.field";
inline constexpr const char* kSynthSummary = "synth_summary.txt";
inline constexpr const char* kTail = "tail.field";
inline constexpr const char* kMinimizer = "minimizer.field";
inline constexpr const char* kIterations = "iterations.csv";
inline constexpr const char* kCoefficient = "coefficient.field";
inline constexpr const char* kResult = "result.txt";
inline constexpr const char* kTable3 = "table3.csv";
inline constexpr const char* kTable4 = "table4.csv";
inline constexpr const char* kCarlemanCsv = "carleman.csv";
inline constexpr const char* kVerify = "verify.txt";
inline constexpr const char* kReport = "report.md";
inline constexpr const char* kCheckpoints = "checkpoints";
}  // namespace files

/// Exact coefficient c sampled on the grid.
Field coefficient_field(const Scene& scene, const GridSpec& grid);

/// The inclusion with the largest contrast, or c_ref = 1 at the domain center for an empty scene.
ReferenceTarget reference_target(const Scene& scene, const GridSpec& grid);

struct SynthOutputs {
  SyntheticDataset dataset;
  Field exact_tail;
};

SynthOutputs synthesize(const RunConfig& cfg);
/// cmd_synth: noisy and clean datasets, exact tail and coefficient, summary.
SynthOutputs cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir);

struct InversionOutputs {
  PreparedData prep;
  TailFunction tail;
  IterateState state;
  ReconstructionResult result;
  double mu = 0.0;
  double lambda = 0.0;
};

/// data_prep -> tail_solver -> convexifier -> reconstructor, in memory.
/// Errors are rethrown as StageError naming the failing stage.
InversionOutputs invert(const RunConfig& cfg, const MeasuredBoundaryData& data,
                        const std::filesystem::path& checkpoint_dir = {});
/// cmd_invert: tail, iteration log, checkpoints, minimizer, coefficient, result and tables.
InversionOutputs cmd_invert(const RunConfig& cfg, const std::filesystem::path& dataset,
                            const std::filesystem::path& out_dir);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::vector<std::string> details;
};

/// Noiseless problem shared by the convexity, gradient and convergence suites.
struct ProbeInstance {
  RunConfig cfg;
  MeasuredBoundaryData clean;
  Field exact_tail;
  PreparedData prep;
  TailFunction tail;
};
ProbeInstance make_probe_instance(const RunConfig& cfg);

/// 7x7x17 grid, 100 random admissible fields, lambda in {5, 10, 20}.
SuiteResult carleman_suite(const RunConfig& cfg, std::uint64_t seed,
                           const std::filesystem::path& csv = {});
/// 50 pairs at cfg lambda against lambda = 0.
SuiteResult convexity_suite(const ProbeInstance& inst, std::uint64_t seed);
/// 20 central-difference directions and 50 Lipschitz pairs.
SuiteResult gradient_suite(const ProbeInstance& inst, std::uint64_t seed);
/// delta in {1e-2, 1e-3, 1e-4} with mu from the schedule.
SuiteResult tail_suite(const ProbeInstance& inst, std::uint64_t seed);
/// Monotone J after burn-in, contraction over the last third, two-start agreement.
SuiteResult convergence_suite(const ProbeInstance& inst, std::uint64_t seed);

/// cmd_verify: every suite; writes verify.txt and carleman.csv.
std::vector<SuiteResult> cmd_verify(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// cmd_report: summary of an invert output directory; writes report.md and returns its text.
std::string cmd_report(const std::filesystem::path& out_dir);

}  // namespace convexify
