#include "steinw/pair_sampler.hpp"

#include <cmath>

namespace steinw {

Vector standard_normal_vector(int dim, Rng& rng) {
  Vector z(dim);
  for (int j = 0; j < dim; ++j) z[j] = standard_normal(rng);
  return z;
}

OuPairSampler::OuPairSampler(int dim) : dim_(dim) {
  if (dim < 1) throw InvalidArgument("dim", "must be >= 1");
}

Anchor OuPairSampler::draw_anchor(Rng& rng) const { return {standard_normal_vector(dim_, rng), {}}; }

Vector OuPairSampler::draw_conditional(const Anchor& anchor, double t, Rng& rng) const {
  const double decay = std::exp(-t);
  const double noise = std::sqrt(-std::expm1(-2.0 * t));
  return decay * anchor.x + noise * standard_normal_vector(dim_, rng);
}

ConstantPairSampler::ConstantPairSampler(int dim, Marginal marginal, std::string label)
    : dim_(dim), marginal_(std::move(marginal)), label_(std::move(label)) {
  if (dim < 1) throw InvalidArgument("dim", "must be >= 1");
}

std::shared_ptr<ConstantPairSampler> ConstantPairSampler::point_mass(const Vector& x) {
  return std::make_shared<ConstantPairSampler>(static_cast<int>(x.size()), [x](Rng&) { return x; }, "point_mass");
}

Anchor ConstantPairSampler::draw_anchor(Rng& rng) const { return {marginal_(rng), {}}; }

Vector ConstantPairSampler::draw_conditional(const Anchor& anchor, double, Rng&) const { return anchor.x; }

MarkovStepPairSampler::MarkovStepPairSampler(int dim, Stationary stationary, Step step, double tau, bool reversible)
    : dim_(dim), stationary_(std::move(stationary)), step_(std::move(step)), tau_(tau), reversible_(reversible) {
  if (dim < 1) throw InvalidArgument("dim", "must be >= 1");
  if (!(tau > 0.0)) throw InvalidArgument("tau", "must be > 0");
}

Anchor MarkovStepPairSampler::draw_anchor(Rng& rng) const { return {stationary_(rng), {}}; }

Vector MarkovStepPairSampler::draw_conditional(const Anchor& anchor, double t, Rng& rng) const {
  if (t < tau_) return anchor.x;
  return step_(anchor.x, rng);
}

FunctionPairSampler::FunctionPairSampler(int dim, bool exchangeable, AnchorFn anchor, ConditionalFn conditional,
                                         std::string label)
    : dim_(dim),
      exchangeable_(exchangeable),
      anchor_(std::move(anchor)),
      conditional_(std::move(conditional)),
      label_(std::move(label)) {
  if (dim < 1) throw InvalidArgument("dim", "must be >= 1");
}

}  // namespace steinw
