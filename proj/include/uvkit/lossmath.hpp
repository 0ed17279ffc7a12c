#pragma once

#include <span>
#include <vector>

namespace uvkit::lossmath {

struct LossConfig {
  double mu = 1e-7;       // Dice smoothing term
  double epsilon = 0.01;  // Dice weight in the combined loss
  double clamp = 1e-7;    // probabilities are clamped to [clamp, 1 - clamp]

  // Throws ValidationError unless mu > 0, epsilon >= 0 and 0 < clamp < 0.5.
  void validate() const;
};

// Labels in {0,1} and predicted probabilities of equal length. Probabilities
// are clamped on construction.
class MaskPair {
 public:
  // Throws ValidationError on length mismatch, empty input, labels outside
  // {0,1} or probabilities outside [0,1].
  MaskPair(std::span<const double> labels, std::span<const double> probabilities, double clamp = 1e-7);

  std::size_t size() const noexcept { return y_.size(); }
  const std::vector<double>& labels() const noexcept { return y_; }
  const std::vector<double>& probabilities() const noexcept { return p_; }

 private:
  std::vector<double> y_;
  std::vector<double> p_;
};

struct LossValue {
  double value = 0.0;
  std::vector<double> gradient;  // d value / d p_i
};

// Mean binary cross-entropy.
LossValue bce(const MaskPair& pair);
// 1 - (2*sum(y*p) + mu) / (sum(y) + sum(p) + mu), on soft probabilities.
LossValue dice(const MaskPair& pair, double mu = 1e-7);
// bce + epsilon * dice.
LossValue combined(const MaskPair& pair, const LossConfig& cfg = {});

// Training settings of the reference model. Documentation only; nothing here
// trains a network.
namespace reference {
inline constexpr double encoder_learning_rate = 3e-6;
inline constexpr double decoder_learning_rate = 3e-4;
inline constexpr double weight_decay = 0.01;
inline constexpr int epochs = 40;
inline constexpr int batch_size = 32;
}  // namespace reference

struct GradientCheckReport {
  std::size_t pairs = 0;
  double max_relative_error_bce = 0.0;
  double max_relative_error_dice = 0.0;
  double max_relative_error_combined = 0.0;
  double seconds = 0.0;
  bool passed = false;
};

// Central finite differences against the analytic gradients of all three
// losses on `pairs` random side x side mask pairs.
GradientCheckReport gradient_check(std::size_t pairs = 100, int side = 32, double step = 1e-5,
                                   double tolerance = 1e-4, unsigned long long seed = 1,
                                   const LossConfig& cfg = {});

}  // namespace uvkit::lossmath
