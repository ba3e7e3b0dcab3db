#include "rescon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace rescon {

namespace {

constexpr std::size_t kMaxCells = std::size_t{1} << 24;

double trapezoid(const Cdf& a, const Cdf& b, double lo, double hi, std::size_t cells) {
  // Evaluate just inside the piece so jumps at either end take the right limit.
  const double lo_in = std::nextafter(lo, hi);
  const double hi_in = std::nextafter(hi, lo);
  const double h = (hi - lo) / static_cast<double>(cells);
  double sum = 0.5 * (std::abs(a(lo_in) - b(lo_in)) + std::abs(a(hi_in) - b(hi_in)));
  for (std::size_t c = 1; c < cells; ++c) {
    const double x = lo + h * static_cast<double>(c);
    sum += std::abs(a(x) - b(x));
  }
  return sum * h;
}

double sigma_of(const GmmComponent& c) { return std::sqrt(c.variance); }

}  // namespace

double malicious_variance_term(const MaliciousBoundInput& in) {
  if (in.detections == 0) {
    return std::numeric_limits<double>::infinity();
  }
  const double gap = static_cast<double>(in.isolation) - static_cast<double>(in.detections);
  return gap * (1.0 + gap / static_cast<double>(in.detections)) * in.error_variance;
}

double faulty_variance_term(const FaultyBoundInput& in) {
  if (in.detections == 0 || in.reliability <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double m = static_cast<double>(in.detections);
  const double p = in.reliability;
  const double span = static_cast<double>(in.end - in.start);
  return (1.0 - p) / (p * p) * (in.error_variance / m + in.theta * in.theta * in.mean * in.mean) +
         span * (1.0 + span / m) * in.error_variance;
}

double variance_bound(const VarianceBoundInputs& in) {
  double total = 0.0;
  for (const auto& m : in.malicious) {
    total += malicious_variance_term(m);
  }
  for (const auto& f : in.faulty) {
    total += faulty_variance_term(f);
  }
  return total;
}

double deviation_bound(double alpha, double rho, std::size_t n_malicious,
                       std::size_t n_remaining) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::invalid_argument("deviation bound needs 0 <= rho < 1");
  }
  if (n_malicious == 0 || rho == 0.0) {
    return 0.0;
  }
  return alpha * rho * static_cast<double>(n_malicious) /
         ((1.0 - rho) * static_cast<double>(n_remaining));
}

VarianceBoundInputs bound_inputs(const ExperimentSummary& summary,
                                 const std::vector<AdversarySpec>& adversaries,
                                 double link_reliability) {
  VarianceBoundInputs in;
  for (const auto& stat : summary.misbehaving) {
    const auto it = std::find_if(adversaries.begin(), adversaries.end(),
                                 [&](const auto& a) { return a.node == stat.node; });
    if (it == adversaries.end()) {
      continue;
    }
    const auto* model = std::get_if<StochasticErrorModel>(&it->law);
    if (model == nullptr) {
      continue;
    }
    if (stat.role == Role::malicious) {
      in.malicious.push_back({stat.exposure, stat.min_detections, model->error_variance()});
    } else {
      in.faulty.push_back({stat.window_start, stat.window_end, link_reliability, model->theta(),
                           model->attack_moments().mean, model->error_variance(),
                           stat.min_detections});
    }
  }
  return in;
}

double wasserstein_1d(const Cdf& a, const Cdf& b, Interval support,
                      const std::vector<double>& breakpoints, std::size_t initial_cells,
                      double tol) {
  if (!(support.lo < support.hi)) {
    throw std::invalid_argument("Wasserstein support must have lo < hi");
  }
  std::vector<double> cuts{support.lo};
  for (double x : breakpoints) {
    if (x > support.lo && x < support.hi) {
      cuts.push_back(x);
    }
  }
  cuts.push_back(support.hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto total_at = [&](std::size_t cells) {
    double s = 0.0;
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      s += trapezoid(a, b, cuts[p], cuts[p + 1], cells);
    }
    return s;
  };
  std::size_t cells = std::max<std::size_t>(initial_cells, 2);
  double previous = total_at(cells);
  while (cells < kMaxCells) {
    cells *= 2;
    const double current = total_at(cells);
    if (std::abs(current - previous) < tol) {
      return current;
    }
    previous = current;
  }
  throw std::runtime_error(
      fmt::format("Wasserstein quadrature did not settle within {} cells", kMaxCells));
}

double compensation_cdf(const StochasticErrorModel& model, std::size_t detections, double x) {
  const double sd = std::sqrt(model.error_variance() / static_cast<double>(detections));
  return normal_cdf((x - model.error_mean()) / sd);
}

Interval wasserstein_support(const StochasticErrorModel& model) {
  const double center = model.error_mean();
  const double spread = 10.0 * std::sqrt(model.error_variance());
  Interval s{std::min(0.0, center - spread), std::max(0.0, center + spread)};
  for (const auto& c : model.gmm().components()) {
    s.lo = std::min(s.lo, c.mean - 10.0 * sigma_of(c));
    s.hi = std::max(s.hi, c.mean + 10.0 * sigma_of(c));
  }
  return s;
}

double attack_compensation_distance(const StochasticErrorModel& model, std::size_t detections) {
  if (detections == 0) {
    throw std::invalid_argument("compensation law needs at least one detection");
  }
  return wasserstein_1d([&](double x) { return error_cdf(model, x); },
                        [&](double x) { return compensation_cdf(model, detections, x); },
                        wasserstein_support(model), {0.0});
}

double gmm_abs_mean(const GmmSpec& gmm) {
  double e = 0.0;
  for (const auto& c : gmm.components()) {
    const double s = sigma_of(c);
    e += c.weight * (std::sqrt(2.0 / std::numbers::pi) * s *
                         std::exp(-c.mean * c.mean / (2.0 * c.variance)) +
                     c.mean * (1.0 - 2.0 * normal_cdf(-c.mean / s)));
  }
  return e;
}

double wasserstein_bound_gmm(const StochasticErrorModel& model, std::size_t detections) {
  if (detections == 0) {
    throw std::invalid_argument("Wasserstein bound needs at least one detection");
  }
  const double theta_mu = model.error_mean();
  const double sd = std::sqrt(model.error_variance() / static_cast<double>(detections));
  double bound = (1.0 - model.theta()) * gmm_abs_mean(model.gmm());
  for (const auto& c : model.gmm().components()) {
    bound += c.weight * (std::abs(theta_mu - c.mean) + std::abs(sd - sigma_of(c)));
  }
  return bound;
}

double consensus_error(const ExperimentSummary& summary) {
  return std::abs(mean_over(summary.final_states, summary.reporting) -
                  mean_over(summary.initial, summary.reporting));
}

std::vector<CdfPoint> cdf_grid(const StochasticErrorModel& model, std::size_t detections,
                               std::size_t points) {
  const Interval s = wasserstein_support(model);
  std::vector<CdfPoint> grid;
  if (points < 2) {
    points = 2;
  }
  grid.reserve(points);
  for (std::size_t p = 0; p < points; ++p) {
    const double x = s.lo + (s.hi - s.lo) * static_cast<double>(p) / static_cast<double>(points - 1);
    grid.push_back({x, error_cdf(model, x), compensation_cdf(model, detections, x)});
  }
  return grid;
}

}  // namespace rescon
