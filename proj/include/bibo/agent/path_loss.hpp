#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace bibo::agent {

/// Log-distance path loss with optional Gaussian shadowing:
///   rssi(d) = tx_power - 10 * n * log10(d) + N(0, sigma)
/// tx_power is the reference RSSI at 1 m. Deterministic for a given seed.
struct PathLossModel {
  double tx_power_dbm{-59.0};
  double exponent{2.0};
  double noise_sigma_dbm{0.0};
  std::uint64_t rng_seed{0};
};

class SignalSampler {
 public:
  explicit SignalSampler(PathLossModel model)
      : model_(model), rng_(model.rng_seed) {}

  double rssi_from_distance(double d_meters) {
    const double d = std::max(d_meters, 0.1);
    double rssi = model_.tx_power_dbm - 10.0 * model_.exponent * std::log10(d);
    if (model_.noise_sigma_dbm > 0.0) {
      std::normal_distribution<double> noise(0.0, model_.noise_sigma_dbm);
      rssi += noise(rng_);
    }
    return rssi;
  }

  const PathLossModel& model() const { return model_; }

 private:
  PathLossModel model_;
  std::mt19937_64 rng_;
};

/// Noise-free range radius: in-range iff d <= 10^((tx - threshold)/(10 n)).
inline double range_radius_m(const PathLossModel& m, double threshold_dbm) {
  return std::pow(10.0, (m.tx_power_dbm - threshold_dbm) / (10.0 * m.exponent));
}

}  // namespace bibo::agent
