#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lyap/system.hpp"
#include "lyap/types.hpp"

namespace lyap {

struct GainPoint {
  double s;
  double k;
};

/// A sample that attained an extreme value or contradicted a hypothesis.
struct Witness {
  std::string what;
  Vector point;
  double time = 0.0;
  double value = 0.0;
};

/// Exponential envelope |E(e,t)| <= k(|e|) exp(-lambda t) |e| fitted on samples.
/// `lambda` is the margin times `lambda_fit`, the smallest tail rate seen.
struct DecayEstimate {
  double lambda_fit = 0.0;
  double lambda = 0.0;
  /// Nondecreasing in s. A single row means a constant gain.
  std::vector<GainPoint> gain_table;
  double radius = 0.0;
  int samples = 0;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::vector<Witness> witnesses;

  /// Gain at s read as an upper step function: the value at the smallest
  /// tabulated radius >= s. Throws NumericalError beyond the last radius
  /// unless s is within `slack` of it. A single row at s = 0 is a
  /// constant gain valid everywhere.
  double gain(double s, double slack = 0.1) const;
  double max_gain() const { return gain_table.empty() ? 0.0 : gain_table.back().k; }
};

struct EstimateOptions {
  int samples = 32;
  double horizon = 20.0;
  double tol = 1e-10;
  /// lambda = margin * lambda_fit.
  double margin = 0.9;
  std::uint64_t seed = 1;
};

/// Local exponential stability on the ball of radius r.
DecayEstimate estimate_les(const SystemModel& model, double radius, const EstimateOptions& opt = {});

/// Tabulated gain k(s) on the radii grid using the rate of an LES estimate.
/// Throws Falsified when some c(e,t) keeps growing or a solution escapes.
DecayEstimate estimate_gain_function(const SystemModel& model, const std::vector<double>& radii,
                                     const DecayEstimate& les, const EstimateOptions& opt = {});

/// Envelope of the operator norm of Phi(e,t): |Phi(e,t)| <= k~(|e|) exp(-lambda~ t).
DecayEstimate estimate_linearized_decay(const SystemModel& model, const std::vector<double>& radii,
                                        const EstimateOptions& opt = {});

/// Box in the x coordinates of a transverse model.
struct Box {
  Vector lo;
  Vector hi;
};

/// Decay of the e-component of the coupled system uniformly over x in the box.
DecayEstimate estimate_les(const TransverseModel& model, double e_radius, const Box& x_box,
                           const EstimateOptions& opt = {});
/// Decay of the e-rows of the full transition matrix of the coupled system,
/// i.e. of dE for every initial variation (de, dx).
DecayEstimate estimate_linearized_decay(const TransverseModel& model, double e_radius, const Box& x_box,
                                        const EstimateOptions& opt = {});
/// Decay of the transversally linear system de' = dF/de(0, x~) de, x~' = G(0, x~),
/// uniformly over x~(0) in the box. The gain table holds one row (s = 0).
DecayEstimate estimate_transverse_decay(const TransverseModel& model, const Box& x_box,
                                        const EstimateOptions& opt = {});

struct BoundConstants {
  double mu = 0.0;   // sup |dF/de(0,x)|
  double rho = 0.0;  // sup |dG/dx(0,x)|
  double c_ee = 0.0; // sup |d2F/de de|
  double c_xe = 0.0; // sup |d2F/dx de|
  double c_ge = 0.0; // sup |dG/de|
  double c = 0.0;    // max of the three above
  Vector mu_at, rho_at, c_at;
  double e_radius = 0.0;
  Box x_box;
  int samples = 0;
  std::string domain;
};

/// Suprema over Halton samples of B_e(r) x box at two refinement levels
/// (n and 4n points). Second-derivative tensors are measured in the
/// Frobenius norm, which dominates the induced norm. Throws NumericalError
/// when a bound grows 10x across the refinements.
BoundConstants estimate_bound_constants(const TransverseModel& model, double e_radius, const Box& x_box,
                                        int samples = 256, std::uint64_t seed = 1);

}  // namespace lyap
