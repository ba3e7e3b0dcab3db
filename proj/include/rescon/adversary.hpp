#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "rescon/graph.hpp"
#include "rescon/rng.hpp"

namespace rescon {

/// Standard normal CDF, Phi(x) = erfc(-x / sqrt 2) / 2.
double normal_cdf(double x);

struct GmmComponent {
  double weight = 1.0;
  double mean = 0.0;
  double variance = 1.0;
};

/// Gaussian mixture. Weights must be nonnegative and sum to one (1e-12);
/// every variance must be strictly positive.
class GmmSpec {
 public:
  GmmSpec() = default;
  explicit GmmSpec(std::vector<GmmComponent> components);

  const std::vector<GmmComponent>& components() const { return components_; }

 private:
  std::vector<GmmComponent> components_;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments mixture_moments(const GmmSpec& gmm);
double gmm_cdf(const GmmSpec& gmm, double x);
double sample_gmm(const GmmSpec& gmm, RandomStream& rng);

/// Rounds [start, end] during which a misbehaving node injects errors.
struct ActiveWindow {
  std::int64_t start = 0;
  std::optional<std::int64_t> end;  ///< open-ended when empty

  bool contains(std::int64_t k) const { return k >= start && (!end || k <= *end); }
};

/// Error X * Y with X ~ Bernoulli(theta) and Y ~ GMM, independent.
class StochasticErrorModel {
 public:
  StochasticErrorModel(double theta, GmmSpec gmm, ActiveWindow window = {});

  double theta() const { return theta_; }
  const GmmSpec& gmm() const { return gmm_; }
  const ActiveWindow& window() const { return window_; }

  /// Mixture mean and variance (mu_i, sigma_i^2 of Y).
  const Moments& attack_moments() const { return moments_; }

  /// theta sigma^2 + (1 - theta) theta mu^2.
  double error_variance() const;
  double error_mean() const { return theta_ * moments_.mean; }

 private:
  double theta_;
  GmmSpec gmm_;
  ActiveWindow window_;
  Moments moments_;
};

enum class DeterministicFamily { cosine, geometric, constant, table };

/// Closed-form error laws:
///   cosine    a cos(b k)
///   geometric a r^k
///   constant  c            (stored in `a`)
///   table     value listed for k, else 0
struct DeterministicErrorModel {
  DeterministicFamily family = DeterministicFamily::constant;
  double a = 0.0;
  double b = 1.0;  ///< cosine frequency or geometric ratio
  std::vector<std::pair<std::int64_t, double>> table;
  ActiveWindow window;

  static DeterministicErrorModel cosine(double amplitude, double frequency, ActiveWindow w = {});
  static DeterministicErrorModel geometric(double amplitude, double ratio, ActiveWindow w = {});
  static DeterministicErrorModel constant(double value, ActiveWindow w = {});
  static DeterministicErrorModel from_table(std::vector<std::pair<std::int64_t, double>> entries,
                                            ActiveWindow w = {});
};

/// Draws X * Y ignoring the active window. Consumes no randomness when the
/// Bernoulli gate is closed.
double sample_error(const StochasticErrorModel& model, RandomStream& rng);

double deterministic_error(const DeterministicErrorModel& model, std::int64_t k);

/// CDF of X * Y: theta F_Y(x) below zero, 1 - theta + theta F_Y(x) from zero.
double error_cdf(const StochasticErrorModel& model, double x);

using ErrorLaw = std::variant<DeterministicErrorModel, StochasticErrorModel>;

const ActiveWindow& window_of(const ErrorLaw& law);

/// Error injected at round k: zero outside the active window.
double error_at(const ErrorLaw& law, std::int64_t k, RandomStream& rng);

enum class Role { normal, malicious, faulty };

const char* to_string(Role role);

/// How a misbehaving node delivers its error.
///   update  adds the error to its own state update (seen by Strategy II)
///   echo    adds the error to the echoed state of `target` and updates
///           consistently with the forged echo (seen by Strategy I at target)
///   erase   drops `target` from its echoes while the error is nonzero and
///           updates as if that state were zero
enum class AttackChannel { update, echo, erase };

const char* to_string(AttackChannel channel);

struct AdversarySpec {
  NodeId node = 0;
  Role role = Role::malicious;
  AttackChannel channel = AttackChannel::update;
  std::optional<NodeId> target;
  ErrorLaw law = DeterministicErrorModel{};
};

}  // namespace rescon
