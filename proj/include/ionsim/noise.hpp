#pragma once

// Projection-noise Monte Carlo, bin averaging, the two-sample Allan variance,
// phase sensitivity and the standard-quantum-limit reference curve.
//
// The Allan variance is the standard two-sample form over the K = floor(M/N_b)
// consecutive bin means, prefactor 1/(2(K-1)).

#include <cstdint>
#include <string>
#include <vector>

#include "ionsim/interferometer.hpp"

namespace ionsim {

/// A series of projective measurements of n_a'' at a fixed operating point.
struct ShotRecord {
  std::vector<std::uint8_t> outcomes;  // each 0 or 1
  double operating_phi = 0.0;          // rad
  double p = 0.0;                      // Bernoulli probability used
  int order = 1;                       // interferometer order snapshot
  double contrast = 1.0;               // contrast snapshot
  std::uint64_t seed = 0;

  std::size_t size() const { return outcomes.size(); }
};

struct AllanRow {
  long long n_b;
  double sigma;
  double delta_phi;
};

struct AllanResult {
  std::vector<AllanRow> rows;
  double slope_used = 0.0;  // d<n_a''>/d phi at the operating point
};

/// M independent Bernoulli(p) draws from the seeded generator.
ShotRecord sample_shots(double p, long long m, std::uint64_t seed);

/// Samples M shots of the interferometer at phase-segment duration t,
/// snapshotting the operating point for later Allan scans.
ShotRecord sample_operating_point(const InterferometerConfig& config, double t, long long m,
                                  std::uint64_t seed);

/// K = floor(M/N_b) consecutive non-overlapping bin means; the trailing
/// partial bin is discarded. Requires 2 < N_b < M/2.
std::vector<double> bin_means(const ShotRecord& record, long long n_b);

/// Two-sample Allan deviation sigma with
/// sigma^2 = 1/(2(K-1)) sum_{i=1}^{K-1} (m_{i+1} - m_i)^2. Needs >= 2 bins.
double allan_variance(const std::vector<double>& bin_means);

/// d<n_a''>/d phi = (C n / 2) sin(n phi).
double fringe_slope(const InterferometerConfig& config, double phi);

/// delta_phi = sigma / |slope|; zero slope (fringe extremum) is an error.
double sensitivity(double sigma, double slope);

/// Fig.-3 standard quantum limit: (0.5/sqrt(N_b)) / 0.5 = 1/sqrt(N_b).
double sql_curve(long long n_b);

/// Bins the record at each N_b, computes sigma and delta_phi = sigma/|slope|
/// with the slope taken at the record's operating point.
AllanResult allan_scan(const ShotRecord& record, const InterferometerConfig& config,
                       const std::vector<long long>& n_b_list);

/// Plain 0/1 text persistence (one character per outcome, single line).
std::string format_shot_record_text(const ShotRecord& record);

}  // namespace ionsim
