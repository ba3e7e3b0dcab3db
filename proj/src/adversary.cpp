#include "rescon/adversary.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace rescon {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

GmmSpec::GmmSpec(std::vector<GmmComponent> components) : components_(std::move(components)) {
  if (components_.empty()) {
    throw std::invalid_argument("GMM needs at least one component");
  }
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
      throw std::invalid_argument("GMM weights must be nonnegative");
    }
    if (!(c.variance > 0.0) || !std::isfinite(c.variance) || !std::isfinite(c.mean)) {
      throw std::invalid_argument("GMM variances must be positive and finite");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument(fmt::format("GMM weights sum to {}, expected 1", total));
  }
}

Moments mixture_moments(const GmmSpec& gmm) {
  double mean = 0.0;
  double second = 0.0;
  for (const auto& c : gmm.components()) {
    mean += c.weight * c.mean;
    second += c.weight * (c.variance + c.mean * c.mean);
  }
  return {mean, second - mean * mean};
}

double gmm_cdf(const GmmSpec& gmm, double x) {
  double f = 0.0;
  for (const auto& c : gmm.components()) {
    f += c.weight * normal_cdf((x - c.mean) / std::sqrt(c.variance));
  }
  return f;
}

double sample_gmm(const GmmSpec& gmm, RandomStream& rng) {
  const auto& comps = gmm.components();
  std::size_t pick = comps.size() - 1;
  if (comps.size() > 1) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t l = 0; l < comps.size(); ++l) {
      acc += comps[l].weight;
      if (u < acc) {
        pick = l;
        break;
      }
    }
  }
  const auto& c = comps[pick];
  return c.mean + std::sqrt(c.variance) * rng.normal();
}

StochasticErrorModel::StochasticErrorModel(double theta, GmmSpec gmm, ActiveWindow window)
    : theta_(theta), gmm_(std::move(gmm)), window_(window), moments_(mixture_moments(gmm_)) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw std::invalid_argument("attack probability theta must lie in [0, 1]");
  }
}

double StochasticErrorModel::error_variance() const {
  const double mu = moments_.mean;
  return theta_ * moments_.variance + (1.0 - theta_) * theta_ * mu * mu;
}

DeterministicErrorModel DeterministicErrorModel::cosine(double amplitude, double frequency,
                                                        ActiveWindow w) {
  return {DeterministicFamily::cosine, amplitude, frequency, {}, w};
}

DeterministicErrorModel DeterministicErrorModel::geometric(double amplitude, double ratio,
                                                           ActiveWindow w) {
  return {DeterministicFamily::geometric, amplitude, ratio, {}, w};
}

DeterministicErrorModel DeterministicErrorModel::constant(double value, ActiveWindow w) {
  return {DeterministicFamily::constant, value, 0.0, {}, w};
}

DeterministicErrorModel DeterministicErrorModel::from_table(
    std::vector<std::pair<std::int64_t, double>> entries, ActiveWindow w) {
  return {DeterministicFamily::table, 0.0, 0.0, std::move(entries), w};
}

double sample_error(const StochasticErrorModel& model, RandomStream& rng) {
  if (!rng.bernoulli(model.theta())) {
    return 0.0;
  }
  return sample_gmm(model.gmm(), rng);
}

double deterministic_error(const DeterministicErrorModel& model, std::int64_t k) {
  if (!model.window.contains(k)) {
    return 0.0;
  }
  const auto kd = static_cast<double>(k);
  switch (model.family) {
    case DeterministicFamily::cosine:
      return model.a * std::cos(model.b * kd);
    case DeterministicFamily::geometric:
      return model.a * std::pow(model.b, kd);
    case DeterministicFamily::constant:
      return model.a;
    case DeterministicFamily::table:
      for (const auto& [round, value] : model.table) {
        if (round == k) {
          return value;
        }
      }
      return 0.0;
  }
  return 0.0;
}

double error_cdf(const StochasticErrorModel& model, double x) {
  const double fy = gmm_cdf(model.gmm(), x);
  return x < 0.0 ? model.theta() * fy : 1.0 - model.theta() + model.theta() * fy;
}

const ActiveWindow& window_of(const ErrorLaw& law) {
  return std::visit([](const auto& m) -> const ActiveWindow& {
    if constexpr (std::is_same_v<std::decay_t<decltype(m)>, StochasticErrorModel>) {
      return m.window();
    } else {
      return m.window;
    }
  }, law);
}

double error_at(const ErrorLaw& law, std::int64_t k, RandomStream& rng) {
  if (const auto* det = std::get_if<DeterministicErrorModel>(&law)) {
    return deterministic_error(*det, k);
  }
  const auto& sto = std::get<StochasticErrorModel>(law);
  if (!sto.window().contains(k)) {
    return 0.0;
  }
  return sample_error(sto, rng);
}

const char* to_string(Role role) {
  switch (role) {
    case Role::normal:
      return "normal";
    case Role::malicious:
      return "malicious";
    case Role::faulty:
      return "faulty";
  }
  return "unknown";
}

const char* to_string(AttackChannel channel) {
  switch (channel) {
    case AttackChannel::update:
      return "update";
    case AttackChannel::echo:
      return "echo";
    case AttackChannel::erase:
      return "erase";
  }
  return "unknown";
}

}  // namespace rescon
