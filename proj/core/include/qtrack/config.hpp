#pragma once

// Run configuration: every knob that changes an output, with JSON round-trip
// and a content hash embedded in all artifacts.

#include <cstdint>
#include <string>

#include "qtrack/detector.hpp"
#include "qtrack/fastsim.hpp"
#include "qtrack/pipeline.hpp"

namespace qtrack {

struct RunConfig {
  GeometryConfig geometry{};
  SimConfig sim{};
  ReconstructionConfig reco{};
  std::uint64_t seed = 1;

  /// Throws ConfigError if any sub-config is invalid.
  void validate() const;
};

/// Canonical JSON text (sorted keys, shortest round-trip doubles).
std::string to_json_text(const RunConfig& config);

/// Keys absent from the text keep their defaults; unknown keys and wrong types
/// raise ConfigError. The result is validated.
RunConfig parse_run_config(const std::string& json_text);

/// 16 hex digits of FNV-1a over the canonical JSON.
std::string config_hash(const RunConfig& config);

/// Presets keyed by the dimensionless laser intensity: sets the xi label and
/// the mean multiplicity from the xi-to-multiplicity anchors.
void apply_xi_preset(RunConfig& config, double xi);

}  // namespace qtrack
