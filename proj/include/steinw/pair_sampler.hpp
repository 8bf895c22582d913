#pragma once

#include "steinw/common.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace steinw {

/// A draw of X_0 together with any hidden state the conditional law needs.
struct Anchor {
  Vector x;
  std::vector<double> context;
};

/// Produces pairs (X_0, X_t) whose marginals both equal a fixed law ν.
class PairSampler {
 public:
  virtual ~PairSampler() = default;
  virtual int dimension() const = 0;
  virtual bool exchangeable() const = 0;
  virtual std::string name() const = 0;
  virtual Anchor draw_anchor(Rng& rng) const = 0;
  /// X_t given the anchor.
  virtual Vector draw_conditional(const Anchor& anchor, double t, Rng& rng) const = 0;
};

using SamplerPtr = std::shared_ptr<const PairSampler>;

/// Stationary Ornstein–Uhlenbeck pair on the standard Gaussian.
class OuPairSampler final : public PairSampler {
 public:
  explicit OuPairSampler(int dim);
  int dimension() const override { return dim_; }
  bool exchangeable() const override { return true; }
  std::string name() const override { return "ou"; }
  Anchor draw_anchor(Rng& rng) const override;
  Vector draw_conditional(const Anchor& anchor, double t, Rng& rng) const override;

 private:
  int dim_;
};

/// X_t ≡ X_0.
class ConstantPairSampler final : public PairSampler {
 public:
  using Marginal = std::function<Vector(Rng&)>;
  ConstantPairSampler(int dim, Marginal marginal, std::string label = "constant");
  static std::shared_ptr<ConstantPairSampler> point_mass(const Vector& x);

  int dimension() const override { return dim_; }
  bool exchangeable() const override { return true; }
  std::string name() const override { return label_; }
  Anchor draw_anchor(Rng& rng) const override;
  Vector draw_conditional(const Anchor& anchor, double t, Rng& rng) const override;

 private:
  int dim_;
  Marginal marginal_;
  std::string label_;
};

/// X_t = M^0 + 1{t >= τ}(M^1 − M^0) for a chain started at stationarity.
class MarkovStepPairSampler final : public PairSampler {
 public:
  using Stationary = std::function<Vector(Rng&)>;
  using Step = std::function<Vector(const Vector&, Rng&)>;
  MarkovStepPairSampler(int dim, Stationary stationary, Step step, double tau, bool reversible = false);

  int dimension() const override { return dim_; }
  bool exchangeable() const override { return reversible_; }
  std::string name() const override { return "markov_step"; }
  Anchor draw_anchor(Rng& rng) const override;
  Vector draw_conditional(const Anchor& anchor, double t, Rng& rng) const override;

 private:
  int dim_;
  Stationary stationary_;
  Step step_;
  double tau_;
  bool reversible_;
};

/// Sampler assembled from callables.
class FunctionPairSampler final : public PairSampler {
 public:
  using AnchorFn = std::function<Anchor(Rng&)>;
  using ConditionalFn = std::function<Vector(const Anchor&, double, Rng&)>;
  FunctionPairSampler(int dim, bool exchangeable, AnchorFn anchor, ConditionalFn conditional,
                      std::string label = "function");

  int dimension() const override { return dim_; }
  bool exchangeable() const override { return exchangeable_; }
  std::string name() const override { return label_; }
  Anchor draw_anchor(Rng& rng) const override { return anchor_(rng); }
  Vector draw_conditional(const Anchor& anchor, double t, Rng& rng) const override {
    return conditional_(anchor, t, rng);
  }

 private:
  int dim_;
  bool exchangeable_;
  AnchorFn anchor_;
  ConditionalFn conditional_;
  std::string label_;
};

Vector standard_normal_vector(int dim, Rng& rng);

}  // namespace steinw
