#ifndef PREFGEO_GP_HPP
#define PREFGEO_GP_HPP

// Gaussian-process core: exponential correlation, field sampling via
// Cholesky factorization, kriging moments, and variograms.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "prefgeo/common.hpp"
#include "prefgeo/grid.hpp"
#include "prefgeo/rng.hpp"

namespace prefgeo {

struct CovarianceSpec {
  double sigma2 = 1.0;  // partial sill
  double tau2 = 0.0;    // nugget
  double phi = 1.0;     // range

  void validate() const {
    require(sigma2 > 0.0, "covariance: sigma2 must be positive");
    require(tau2 >= 0.0, "covariance: tau2 must be nonnegative");
    require(phi > 0.0, "covariance: phi must be positive");
  }
};

inline double exp_correlation(double h, double phi) {
  require(phi > 0.0, "exp_correlation: phi must be positive");
  require(h >= 0.0, "exp_correlation: distance must be nonnegative");
  return std::exp(-h / phi);
}

/// R_ij = exp(-d_ij / phi); unit diagonal, symmetric.
inline Eigen::MatrixXd build_correlation(const Eigen::MatrixXd& dist, double phi) {
  require(phi > 0.0, "build_correlation: phi must be positive");
  const auto m = dist.rows();
  Eigen::MatrixXd r(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    r(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double v = std::exp(-dist(i, j) / phi);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

/// Cholesky of a correlation-scale matrix with an escalating diagonal
/// jitter (1e-8, then x10, three retries). Empty optional when the
/// matrix stays non-factorizable.
inline std::optional<Eigen::LLT<Eigen::MatrixXd>> cholesky_with_jitter(
    const Eigen::MatrixXd& r, double initial_jitter = 1e-8) {
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() == Eigen::Success) return llt;
  double jitter = initial_jitter;
  for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
    Eigen::MatrixXd rj = r;
    rj.diagonal().array() += jitter;
    llt.compute(rj);
    if (llt.info() == Eigen::Success) return llt;
  }
  return std::nullopt;
}

struct FieldSample {
  Eigen::VectorXd values;
};

/// Draw S ~ N(0, sigma2 * R(phi)) over the active grid cells.
inline FieldSample sample_gaussian_field(const Grid& grid, double sigma2, double phi,
                                         Rng& rng) {
  require(sigma2 > 0.0, "sample_gaussian_field: sigma2 must be positive");
  require(phi > 0.0, "sample_gaussian_field: phi must be positive");
  const Eigen::MatrixXd r = build_correlation(pairwise_distances(grid), phi);
  const auto llt = cholesky_with_jitter(r);
  if (!llt) throw NumericalError("sample_gaussian_field: correlation factorization failed");
  Eigen::VectorXd z(grid.cell_count());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const Eigen::VectorXd colored = llt->matrixL() * z;
  return FieldSample{std::sqrt(sigma2) * colored};
}

inline FieldSample sample_gaussian_field(const Grid& grid, double sigma2, double phi,
                                         std::uint64_t seed) {
  Rng rng(seed);
  return sample_gaussian_field(grid, sigma2, phi, rng);
}

struct KrigingMoments {
  Eigen::VectorXd mean;  // length N (targets)
  Eigen::MatrixXd cov;   // N x N
};

/// Conditional moments of S at `target_cells` given observations y at
/// `obs_cells`:
///   mean = s2 R_Nn (t2 I + s2 Rn)^-1 (y - mu 1)
///   cov  = s2 R_N - s2 R_Nn (t2 I + s2 Rn)^-1 s2 R_nN
/// The linear system is solved through an SPD factorization.
inline KrigingMoments kriging_moments(const std::vector<int>& obs_cells,
                                      const Eigen::VectorXd& y, double mu,
                                      const CovarianceSpec& spec,
                                      const std::vector<int>& target_cells,
                                      const Eigen::MatrixXd& dist) {
  spec.validate();
  require(!obs_cells.empty(), "kriging_moments: need at least one observation");
  require(static_cast<Eigen::Index>(obs_cells.size()) == y.size(),
          "kriging_moments: y length must match obs_cells");
  const int n = static_cast<int>(obs_cells.size());
  const int nt = static_cast<int>(target_cells.size());

  Eigen::MatrixXd c(n, n);  // t2 I + s2 Rn
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = dist(obs_cells[i], obs_cells[j]);
      c(i, j) = spec.sigma2 * std::exp(-d / spec.phi) + (i == j ? spec.tau2 : 0.0);
    }
  }
  Eigen::MatrixXd cross(nt, n);  // s2 R_Nn
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < n; ++j)
      cross(i, j) = spec.sigma2 * std::exp(-dist(target_cells[i], obs_cells[j]) / spec.phi);

  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success)
    throw NumericalError("kriging_moments: observation system is singular");

  KrigingMoments out;
  const Eigen::VectorXd centered = y.array() - mu;
  out.mean = cross * llt.solve(centered);
  Eigen::MatrixXd prior(nt, nt);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nt; ++j)
      prior(i, j) = spec.sigma2 * std::exp(-dist(target_cells[i], target_cells[j]) / spec.phi);
  out.cov = prior - cross * llt.solve(cross.transpose());
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

/// gamma(h) = tau2 + sigma2 (1 - exp(-h/phi)) for h > 0, gamma(0) = 0.
inline double theoretical_variogram(double h, const CovarianceSpec& spec) {
  require(h >= 0.0, "theoretical_variogram: distance must be nonnegative");
  if (h == 0.0) return 0.0;
  return spec.tau2 + spec.sigma2 * (1.0 - std::exp(-h / spec.phi));
}

struct VariogramBin {
  double midpoint = 0.0;
  double semivariance = 0.0;
  long pairs = 0;
};

/// Per-bin (1 / 2|bin|) sum (y_i - y_j)^2 over pairs at binned distances.
/// Empty bins are omitted.
inline std::vector<VariogramBin> empirical_variogram(const Eigen::MatrixXd& coords,
                                                     const Eigen::VectorXd& y,
                                                     const std::vector<double>& bin_edges) {
  require(coords.rows() >= 2, "empirical_variogram: need at least two points");
  require(coords.rows() == y.size(), "empirical_variogram: coords/y length mismatch");
  require(bin_edges.size() >= 2, "empirical_variogram: need at least one bin");
  for (std::size_t k = 1; k < bin_edges.size(); ++k)
    require(bin_edges[k] > bin_edges[k - 1], "empirical_variogram: bin edges must increase");

  const std::size_t nbin = bin_edges.size() - 1;
  std::vector<double> acc(nbin, 0.0);
  std::vector<long> cnt(nbin, 0);
  const auto n = coords.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double h = (coords.row(i) - coords.row(j)).norm();
      if (h < bin_edges.front() || h >= bin_edges.back()) continue;
      const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), h);
      const std::size_t b = static_cast<std::size_t>(it - bin_edges.begin()) - 1;
      const double diff = y[i] - y[j];
      acc[b] += diff * diff;
      ++cnt[b];
    }
  }
  std::vector<VariogramBin> out;
  for (std::size_t b = 0; b < nbin; ++b) {
    if (cnt[b] == 0) continue;
    out.push_back({0.5 * (bin_edges[b] + bin_edges[b + 1]), acc[b] / (2.0 * cnt[b]), cnt[b]});
  }
  return out;
}

/// Default binning: 15 equal-width bins up to half the maximum pair distance.
inline std::vector<double> default_variogram_bins(const Eigen::MatrixXd& coords,
                                                  int nbins = 15) {
  require(coords.rows() >= 2, "default_variogram_bins: need at least two points");
  double maxd = 0.0;
  for (Eigen::Index i = 0; i < coords.rows(); ++i)
    for (Eigen::Index j = i + 1; j < coords.rows(); ++j)
      maxd = std::max(maxd, (coords.row(i) - coords.row(j)).norm());
  const double top = 0.5 * maxd;
  std::vector<double> edges(nbins + 1);
  for (int k = 0; k <= nbins; ++k) edges[k] = top * k / nbins;
  // Open the lower edge a hair so identical-location pairs are excluded
  // but genuine short distances are kept.
  edges[0] = 1e-12 * top;
  return edges;
}

}  // namespace prefgeo

#endif
