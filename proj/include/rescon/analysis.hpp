#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "rescon/adversary.hpp"
#include "rescon/engine.hpp"

namespace rescon {

struct MaliciousBoundInput {
  std::int64_t isolation = 0;  ///< k^iso, counted in rounds
  std::size_t detections = 0;  ///< M
  double error_variance = 0.0;
};

struct FaultyBoundInput {
  std::int64_t start = 0;  ///< k^0
  std::int64_t end = 0;    ///< k^1
  double reliability = 1.0;
  double theta = 1.0;
  double mean = 0.0;  ///< mu of the attack law
  double error_variance = 0.0;
  std::size_t detections = 0;
};

struct VarianceBoundInputs {
  std::vector<MaliciousBoundInput> malicious;
  std::vector<FaultyBoundInput> faulty;
};

/// (k - M)(1 + (k - M)/M) sigma^2; infinite when M = 0.
double malicious_variance_term(const MaliciousBoundInput& in);

/// (1-p)/p^2 (sigma^2/M + theta^2 mu^2) + (k1 - k0)(1 + (k1 - k0)/M) sigma^2.
double faulty_variance_term(const FaultyBoundInput& in);

double variance_bound(const VarianceBoundInputs& in);

/// alpha rho |V_m| / ((1 - rho) |V_r|).
double deviation_bound(double alpha, double rho, std::size_t n_malicious,
                       std::size_t n_remaining);

/// Collects bound inputs from a finished run. Misbehaving nodes with a
/// deterministic law carry no variance and are skipped.
VarianceBoundInputs bound_inputs(const ExperimentSummary& summary,
                                 const std::vector<AdversarySpec>& adversaries,
                                 double link_reliability);

using Cdf = std::function<double(double)>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Integral of |F - G| over `support` by the trapezoid rule. The interval is
/// split at `breakpoints` (CDF jumps); each piece starts at `initial_cells`
/// cells and is halved until the total moves by less than `tol`. Throws
/// std::runtime_error if that never happens.
double wasserstein_1d(const Cdf& a, const Cdf& b, Interval support,
                      const std::vector<double>& breakpoints = {},
                      std::size_t initial_cells = 256, double tol = 1e-6);

/// N(theta mu, sigma_eps^2 / M), the mean-based compensation law.
double compensation_cdf(const StochasticErrorModel& model, std::size_t detections, double x);

/// Union of theta mu +- 10 sigma_eps, every component's mu_l +- 10 sigma_l,
/// and the origin.
Interval wasserstein_support(const StochasticErrorModel& model);

/// Distance between the attack-error law and its compensation law.
double attack_compensation_distance(const StochasticErrorModel& model, std::size_t detections);

/// sum a_l { sqrt(2/pi) sigma_l exp(-mu_l^2 / 2 sigma_l^2) + mu_l [1 - 2 Phi(-mu_l/sigma_l)] }.
double gmm_abs_mean(const GmmSpec& gmm);

/// (1 - theta) E|Y| + sum a_l (|theta mu - mu_l| + |sigma_eps / sqrt M - sigma_l|).
double wasserstein_bound_gmm(const StochasticErrorModel& model, std::size_t detections);

double consensus_error(const ExperimentSummary& summary);

struct CdfPoint {
  double x = 0.0;
  double attack = 0.0;
  double compensation = 0.0;
};

std::vector<CdfPoint> cdf_grid(const StochasticErrorModel& model, std::size_t detections,
                               std::size_t points);

}  // namespace rescon
