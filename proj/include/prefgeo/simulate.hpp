#ifndef PREFGEO_SIMULATE_HPP
#define PREFGEO_SIMULATE_HPP

// Synthetic data generation under the preferential model: latent field,
// log-Gaussian Cox counts per cell, Gaussian observations, and the five
// standard case presets.

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "prefgeo/common.hpp"
#include "prefgeo/gp.hpp"
#include "prefgeo/grid.hpp"
#include "prefgeo/rng.hpp"

namespace prefgeo {

struct PreferentialParams {
  double alpha = 0.0;  // log-intensity intercept
  double beta = 0.0;   // coupling to the latent field

  void validate() const {
    require(std::isfinite(alpha) && std::isfinite(beta),
            "preferential params must be finite");
  }
};

/// True generating values attached to a simulated dataset.
struct TruthInfo {
  Eigen::VectorXd s;
  double mu = 0.0, sigma2 = 1.0, tau2 = 0.0, phi = 1.0;
  double alpha = 0.0, beta = 0.0;
};

/// Cell-resolved dataset: counts n_i plus per-cell observation totals.
/// y_sq_sum carries the per-cell sum of squared observations so that
/// exact Gaussian likelihood terms are available when a cell holds more
/// than one point.
struct Dataset {
  Grid grid;
  Eigen::VectorXi counts;
  Eigen::VectorXd y_sum;
  Eigen::VectorXd y_sq_sum;
  std::optional<TruthInfo> truth;

  long n() const { return counts.cast<long>().sum(); }

  std::vector<int> occupied_cells() const {
    std::vector<int> out;
    for (int i = 0; i < counts.size(); ++i)
      if (counts[i] > 0) out.push_back(i);
    return out;
  }

  void validate() const {
    const int m = grid.cell_count();
    require(counts.size() == m && y_sum.size() == m && y_sq_sum.size() == m,
            "dataset: vector lengths must equal grid cell count");
    for (int i = 0; i < m; ++i) {
      require(counts[i] >= 0, "dataset: counts must be nonnegative");
      if (counts[i] == 0)
        require(y_sum[i] == 0.0 && y_sq_sum[i] == 0.0,
                "dataset: empty cells must have zero observation totals");
    }
  }
};

/// n_i ~ Poisson(Delta_i * exp(alpha + beta * S_i)), independent given S.
inline Eigen::VectorXi simulate_cox_counts(const FieldSample& s,
                                           const PreferentialParams& pref,
                                           const Grid& grid, Rng& rng) {
  pref.validate();
  require(s.values.size() == grid.cell_count(), "simulate_cox_counts: field/grid mismatch");
  const int m = grid.cell_count();
  Eigen::VectorXi counts(m);
  for (int i = 0; i < m; ++i) {
    const double log_rate = pref.alpha + pref.beta * s.values[i];
    if (log_rate > 700.0)
      throw NumericalError("simulate_cox_counts: intensity overflow at cell " +
                           std::to_string(i));
    counts[i] = static_cast<int>(rng.poisson(grid.volume(i) * std::exp(log_rate)));
  }
  return counts;
}

/// Each of the n_i points in cell i receives an independent
/// N(mu + S_i, tau2) response; totals and squared totals accumulate.
inline void simulate_observations(const FieldSample& s, const Eigen::VectorXi& counts,
                                  double mu, double tau2, Rng& rng,
                                  Eigen::VectorXd& y_sum, Eigen::VectorXd& y_sq_sum) {
  require(tau2 >= 0.0, "simulate_observations: tau2 must be nonnegative");
  require(counts.size() == s.values.size(), "simulate_observations: counts/field mismatch");
  const auto m = counts.size();
  y_sum.setZero(m);
  y_sq_sum.setZero(m);
  const double sd = std::sqrt(tau2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int k = 0; k < counts[i]; ++k) {
      const double y = mu + s.values[i] + sd * rng.normal();
      y_sum[i] += y;
      y_sq_sum[i] += y * y;
    }
  }
}

enum class CasePreset { I, II, III, IV, V };

struct CaseSpec {
  Region region;
  std::vector<int> cells_per_axis;
  PreferentialParams pref;
  double mu, sigma2, phi, tau2;
};

inline CaseSpec case_spec(CasePreset preset) {
  switch (preset) {
    case CasePreset::I:
      return {Region::interval(0, 100), {100}, {-3.0, 2.0}, 12.0, 2.0, 20.0, 0.1};
    case CasePreset::II:
      return {Region::interval(0, 100), {200}, {-3.5, 3.0}, 12.0, 1.0, 20.0, 0.01};
    case CasePreset::III:
      return {Region::interval(0, 200), {200}, {-1.5, 0.5}, 12.0, 1.0, 20.0, 0.01};
    case CasePreset::IV:
      return {Region::box(0, 100, 0, 100), {15, 15}, {-8.0, 2.0}, 12.0, 2.0, 20.0, 0.1};
    case CasePreset::V:
      return {Region::box(0, 100, 0, 100), {20, 20}, {-8.0, 2.0}, 12.0, 2.0, 20.0, 0.1};
  }
  throw std::invalid_argument("unknown case preset");
}

inline CasePreset case_preset_from_string(const std::string& s) {
  if (s == "I" || s == "1") return CasePreset::I;
  if (s == "II" || s == "2") return CasePreset::II;
  if (s == "III" || s == "3") return CasePreset::III;
  if (s == "IV" || s == "4") return CasePreset::IV;
  if (s == "V" || s == "5") return CasePreset::V;
  throw std::invalid_argument("unknown case preset '" + s + "'");
}

/// Full pipeline on an explicit grid and parameter set: field -> counts
/// -> observations. Truth is retained for prediction-error studies.
inline Dataset simulate_dataset(const Grid& grid, const PreferentialParams& pref,
                                double mu, double sigma2, double phi, double tau2,
                                std::uint64_t seed) {
  Rng rng(seed);
  FieldSample s = sample_gaussian_field(grid, sigma2, phi, rng);
  Dataset d;
  d.grid = grid;
  d.counts = simulate_cox_counts(s, pref, grid, rng);
  simulate_observations(s, d.counts, mu, tau2, rng, d.y_sum, d.y_sq_sum);
  d.truth = TruthInfo{s.values, mu, sigma2, tau2, phi, pref.alpha, pref.beta};
  d.validate();
  return d;
}

inline Dataset simulate_case(CasePreset preset, std::uint64_t seed) {
  const CaseSpec cs = case_spec(preset);
  const Grid grid = build_grid(cs.region, cs.cells_per_axis);
  return simulate_dataset(grid, cs.pref, cs.mu, cs.sigma2, cs.phi, cs.tau2, seed);
}

}  // namespace prefgeo

#endif
