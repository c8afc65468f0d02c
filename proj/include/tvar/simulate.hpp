#pragma once

#include "tvar/sampler.hpp"
#include "tvar/var_data.hpp"

namespace tvar {

struct SimConfig {
  int n = 5;
  int p = 2;
  int T = 300;
  int rank = 1;
  VolRegime regime = VolRegime::Homoskedastic;
  std::uint64_t seed = 1;
  double spectral_target = 0.9;  // coefficient tensor rescaled below this
  double csv_phi = 0.95;
  double csv_sigma_h2 = 0.05;
  double sv_b21 = 0.5;  // lower-triangular B0 fill (CholeskySV)
  Quarter start = {1990, 1};
};

struct SimResult {
  SeriesPanel panel;       // T + p rows (initial conditions included)
  CPFactors factors;       // true factors after stationarity rescaling
  VolatilityState vol;     // true volatility path used
};

// Generates data from a TVAR with the chosen volatility regime; the factors
// are scaled so the companion matrix is stable.
SimResult simulate_tvar(const SimConfig& cfg);

}  // namespace tvar
