#include "uvkit/lossmath.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "uvkit/error.hpp"
#include "uvkit/numeric.hpp"

namespace uvkit::lossmath {

void LossConfig::validate() const {
  if (!(mu > 0.0)) throw ValidationError("loss mu must be > 0");
  if (!(epsilon >= 0.0)) throw ValidationError("loss epsilon must be >= 0");
  if (!(clamp > 0.0 && clamp < 0.5)) throw ValidationError("loss clamp must be in (0, 0.5)");
}

MaskPair::MaskPair(std::span<const double> labels, std::span<const double> probabilities, double clamp) {
  if (labels.size() != probabilities.size()) throw ValidationError("label/prediction length mismatch");
  if (labels.empty()) throw ValidationError("empty mask pair");
  if (!(clamp > 0.0 && clamp < 0.5)) throw ValidationError("clamp must be in (0, 0.5)");
  y_.assign(labels.begin(), labels.end());
  p_.reserve(probabilities.size());
  for (double y : y_) {
    if (y != 0.0 && y != 1.0) throw ValidationError("labels must be 0 or 1");
  }
  for (double p : probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("probabilities must lie in [0, 1]");
    p_.push_back(std::clamp(p, clamp, 1.0 - clamp));
  }
}

namespace {

double bce_value(std::span<const double> y, std::span<const double> p) {
  CompensatedSum total;
  for (std::size_t i = 0; i < y.size(); ++i) {
    total.add(y[i] == 1.0 ? std::log(p[i]) : std::log1p(-p[i]));
  }
  return -total.value() / static_cast<double>(y.size());
}

struct DiceTerms {
  double num;
  double den;
};

DiceTerms dice_terms(std::span<const double> y, std::span<const double> p, double mu) {
  CompensatedSum inter, sum_y, sum_p;
  for (std::size_t i = 0; i < y.size(); ++i) {
    inter.add(y[i] * p[i]);
    sum_y.add(y[i]);
    sum_p.add(p[i]);
  }
  return {2.0 * inter.value() + mu, sum_y.value() + sum_p.value() + mu};
}

double dice_value(std::span<const double> y, std::span<const double> p, double mu) {
  const DiceTerms t = dice_terms(y, p, mu);
  return 1.0 - t.num / t.den;
}

}  // namespace

LossValue bce(const MaskPair& pair) {
  const auto& y = pair.labels();
  const auto& p = pair.probabilities();
  const double n = static_cast<double>(pair.size());
  LossValue out;
  out.value = bce_value(y, p);
  out.gradient.resize(pair.size());
  for (std::size_t i = 0; i < pair.size(); ++i) {
    out.gradient[i] = -(y[i] / p[i] - (1.0 - y[i]) / (1.0 - p[i])) / n;
  }
  return out;
}

LossValue dice(const MaskPair& pair, double mu) {
  if (!(mu > 0.0)) throw ValidationError("dice mu must be > 0");
  const auto& y = pair.labels();
  const auto& p = pair.probabilities();
  const DiceTerms t = dice_terms(y, p, mu);
  const double num = t.num, den = t.den;
  LossValue out;
  out.value = 1.0 - num / den;
  out.gradient.resize(pair.size());
  const double den2 = den * den;
  for (std::size_t i = 0; i < pair.size(); ++i) {
    out.gradient[i] = -(2.0 * y[i] * den - num) / den2;
  }
  return out;
}

LossValue combined(const MaskPair& pair, const LossConfig& cfg) {
  cfg.validate();
  LossValue b = bce(pair);
  if (cfg.epsilon == 0.0) return b;
  const LossValue d = dice(pair, cfg.mu);
  b.value += cfg.epsilon * d.value;
  for (std::size_t i = 0; i < b.gradient.size(); ++i) b.gradient[i] += cfg.epsilon * d.gradient[i];
  return b;
}

GradientCheckReport gradient_check(std::size_t pairs, int side, double step, double tolerance,
                                   unsigned long long seed, const LossConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  GradientCheckReport report;
  report.pairs = pairs;
  const std::size_t n = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
  std::vector<double> y(n), p(n), probe(n);

  auto relative = [](double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
  };

  for (std::size_t k = 0; k < pairs; ++k) {
    CounterRng rng(hash_combine(seed, k));
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
      // stay clear of the clamp so the finite differences see the smooth loss
      p[i] = rng.uniform(0.02, 0.98);
    }
    const MaskPair pair(y, p, cfg.clamp);
    const LossValue analytic[3] = {bce(pair), dice(pair, cfg.mu), combined(pair, cfg)};
    double* worst[3] = {&report.max_relative_error_bce, &report.max_relative_error_dice,
                        &report.max_relative_error_combined};
    // Finite differences only ever evaluate loss values.
    probe = pair.probabilities();
    const std::vector<double>& base = pair.probabilities();
    for (std::size_t i = 0; i < n; ++i) {
      probe[i] = base[i] + step;
      const double b_up = bce_value(y, probe), d_up = dice_value(y, probe, cfg.mu);
      probe[i] = base[i] - step;
      const double b_dn = bce_value(y, probe), d_dn = dice_value(y, probe, cfg.mu);
      probe[i] = base[i];
      const double fd[3] = {(b_up - b_dn) / (2 * step), (d_up - d_dn) / (2 * step),
                            ((b_up + cfg.epsilon * d_up) - (b_dn + cfg.epsilon * d_dn)) / (2 * step)};
      for (int l = 0; l < 3; ++l) *worst[l] = std::max(*worst[l], relative(analytic[l].gradient[i], fd[l]));
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.passed = report.max_relative_error_bce < tolerance && report.max_relative_error_dice < tolerance &&
                  report.max_relative_error_combined < tolerance;
  return report;
}

}  // namespace uvkit::lossmath
