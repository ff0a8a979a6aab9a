#pragma once

// Doublet and triplet candidates with the geometric pre-selection cuts:
// a window in dx/x0 for doublets and a maximum kink angle for triplets.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qtrack/detector.hpp"

namespace qtrack {

/// Two hits on consecutive layers. `inner` and `outer` index into Event::hits.
struct Doublet {
  std::size_t inner = 0;
  std::size_t outer = 0;
  int inner_layer = 0;
  double theta_xz = 0.0;
  double theta_yz = 0.0;
  double dx_over_x0 = 0.0;

  friend bool operator==(const Doublet&, const Doublet&) = default;
};

/// Two doublets chained through a shared middle hit.
struct Triplet {
  Doublet first;
  Doublet second;
  double delta_theta = 0.0;

  [[nodiscard]] int first_layer() const { return first.inner_layer; }
  [[nodiscard]] int last_layer() const { return second.inner_layer + 1; }
  [[nodiscard]] std::array<std::size_t, 3> hits() const {
    return {first.inner, first.outer, second.outer};
  }

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct PreselectionWindow {
  double dx_mean = 0.17;
  double dx_sigma = 0.025;
  double n_sigma = 3.0;
  double max_delta_theta = 1e-3;

  [[nodiscard]] double dx_low() const { return dx_mean - n_sigma * dx_sigma; }
  [[nodiscard]] double dx_high() const { return dx_mean + n_sigma * dx_sigma; }

  friend bool operator==(const PreselectionWindow&, const PreselectionWindow&) = default;
};

inline constexpr double kMinDxSigma = 1e-9;

/// Throws ConfigError unless dx_sigma > 0, n_sigma > 0 and max_delta_theta > 0.
void validate(const PreselectionWindow& window);

/// Doublet features for an arbitrary pair of hits on consecutive layers.
/// Returns nullopt when x0 (the inner hit's x) is zero.
std::optional<Doublet> make_doublet(std::span<const Hit> hits, std::size_t inner,
                                    std::size_t outer);

/// Every consecutive-layer pair whose hits share a truth particle, without cuts.
std::vector<Doublet> truth_doublets(const Event& event);

struct DxCalibration {
  double mean = 0.0;
  double sigma = 0.0;
};

/// Sample mean and sample standard deviation of dx/x0. Throws ConfigError
/// for fewer than two inputs.
DxCalibration calibrate_dx_window(std::span<const Doublet> truth);

/// Window from a calibration, with the sigma floored at kMinDxSigma.
PreselectionWindow window_from_calibration(const DxCalibration& cal,
                                           const PreselectionWindow& base = {});

struct DoubletSet {
  std::vector<Doublet> doublets;
  std::size_t skipped_zero_x0 = 0;
};

/// All consecutive-layer pairs inside the dx/x0 window (bounds inclusive).
DoubletSet build_doublets(std::span<const Hit> hits, const PreselectionWindow& window);

/// Quadrature sum of the slope-angle differences. Throws ContractViolation if
/// the doublets do not share the middle hit.
double triplet_delta_theta(const Doublet& first, const Doublet& second);

/// All chained doublet pairs with delta_theta <= max_delta_theta.
std::vector<Triplet> build_triplets(std::span<const Doublet> doublets,
                                    const PreselectionWindow& window);

/// Truth helpers used by calibration and evaluation.
std::optional<ParticleId> common_particle(std::span<const Hit> hits,
                                          std::span<const std::size_t> indices);
bool is_truth_doublet(std::span<const Hit> hits, const Doublet& d);
bool is_truth_triplet(std::span<const Hit> hits, const Triplet& t);

}  // namespace qtrack
