#pragma once

// Machine-readable reports (schema_version 1).  The CSV residual table has
// one row per JSON entry of "validation" and "identities", same order.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glue/collar_engine.hpp"
#include "glue/family_model.hpp"
#include "glue/morse_engine.hpp"

namespace glue {

struct VerifyConfig {
  int samples = 1000;
  double tol = 1e-9;
  std::uint64_t seed = 1;
  double epsilon_floor = 1e-6;
};

struct VerifyReport {
  std::string family;
  VerifyConfig config;
  ValidationReport validation;
  std::vector<AtlasRecord> atlas;
  std::vector<IdentityCheck> identities;
  bool passed = true;
  std::string first_failure; // "" when passed
  std::string abort;         // set when collar construction gave up
};

/// Validation, collar construction and every identity check.  A family that
/// fails validation is reported without building collars.
VerifyReport run_verify(const StratifiedFamily& family, const VerifyConfig& config);

std::string verify_json(const VerifyReport& report);
/// Columns: family, identity, pair, I1, I2, samples, max_residual, pass.
std::string verify_csv(const VerifyReport& report);

struct GlueSample {
  std::string p, r, q;
  int first = 0, second = 0;
  double lambda = 0.0;
  double hausdorff = 0.0; // to the broken image
};

struct MorseReport {
  std::string system;
  MorseOptions options;
  std::vector<CriticalPointData> critical_points;
  std::vector<ModuliSample> moduli;
  std::vector<std::pair<std::string, std::string>> arc_pairs;
  std::vector<std::vector<ModuliArc>> arcs;
  std::vector<TransversalityReport> transversality;
  std::vector<GlueSample> glue;
  std::vector<std::string> notes;
};

/// Everything the engine computes for one system.  Throws InputError when
/// a critical point is degenerate.
MorseReport run_morse(MorseModel& model, const std::vector<double>& lambdas = {1e-1, 1e-2, 1e-3});

std::string morse_json(const MorseReport& report);

} // namespace glue
