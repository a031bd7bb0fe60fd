#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "convexify/errors.hpp"
#include "convexify/field_io.hpp"
#include "convexify/pipeline.hpp"

using namespace convexify;
namespace fs = std::filesystem;

namespace {

RunConfig small(const std::string& scene = "") {
  return parse_config("[grid]\nn_h = 7\nn_z = 13\nn_k = 3\n[scene]\nvoxel_size = 0.05\n" + scene +
                      "[solver]\ngamma = 0.5\nmax_iter = 40\n");
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("convexify_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("reference target picks the strongest inclusion") {
  const RunConfig c = small("inclusion_1 = box 0.1 0 0 0.05 0.05 0.05 2\ninclusion_2 = ball 0 0 -0.1 0.05 3\n");
  const ReferenceTarget r = reference_target(c.scene, c.grid_spec());
  CHECK(r.c_ref == 3.0);
  CHECK(r.location[2] == -0.1);
  const ReferenceTarget e = reference_target(Scene{}, c.grid_spec());
  CHECK(e.c_ref == 1.0);
}

TEST_CASE("uniform medium inverts to c = 1") {
  const RunConfig c = small();
  const SynthOutputs s = synthesize(c);
  const InversionOutputs inv = invert(c, s.dataset.noisy);
  for (const auto& v : inv.result.c.values()) CHECK(std::abs(v - 1.0) < 1e-12);
  CHECK(inv.result.c_comp == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("synth, invert and report write their files") {
  const RunConfig c = small("inclusion_1 = ball 0 0 0 0.1 1.5\nsmoothing_width = 0.04\n");
  const fs::path dir = scratch("pipeline");
  cmd_synth(c, dir);
  for (const char* f : {files::kDataset, files::kDatasetClean, files::kExactTail, files::kExactCoefficient,
                        files::kSynthSummary})
    CHECK(fs::exists(dir / f));
  const InversionOutputs inv = cmd_invert(c, dir / files::kDataset, dir);
  for (const char* f : {files::kTail, files::kMinimizer, files::kIterations, files::kCoefficient, files::kResult,
                        files::kTable3, files::kTable4})
    CHECK(fs::exists(dir / f));
  const FieldFile coef = read_field_file(dir / files::kCoefficient);
  CHECK(coef.field.values() == inv.result.c.values());
  const std::string md = cmd_report(dir);
  CHECK(md.find("c_comp") != std::string::npos);
  CHECK(fs::exists(dir / files::kReport));
  fs::remove_all(dir);
}

TEST_CASE("failures name the stage") {
  const RunConfig c = small();
  SynthOutputs s = synthesize(c);
  s.dataset.noisy.g0(2, 2, 1) = 0.0;
  try {
    invert(c, s.dataset.noisy);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "data_prep");
    CHECK(std::string(e.what()).rfind("data_prep: ", 0) == 0);
  }
  CHECK_THROWS_AS(cmd_invert(c, scratch("missing") / "dataset.txt", scratch("missing_out")), StageError);
  CHECK_THROWS_AS(cmd_report(scratch("nothing")), IoError);
}

TEST_CASE("a dataset from another grid is rejected") {
  const RunConfig c = small();
  RunConfig other = c;
  other.grid.n_h = 9;
  const SynthOutputs s = synthesize(other);
  CHECK_THROWS_AS(invert(c, s.dataset.noisy), StageError);
}
