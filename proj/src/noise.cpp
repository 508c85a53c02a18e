#include "ionsim/noise.hpp"

#include <cmath>

#include "ionsim/rng.hpp"

namespace ionsim {

ShotRecord sample_shots(double p, long long m, std::uint64_t seed) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("sample_shots: p must be within [0, 1]");
  if (m < 1) throw std::invalid_argument("sample_shots: need at least one shot");
  ShotRecord rec;
  rec.p = p;
  rec.seed = seed;
  rec.outcomes.resize(static_cast<std::size_t>(m));
  Xoshiro256ss rng(seed);
  for (auto& b : rec.outcomes) b = rng.uniform01() < p ? 1 : 0;
  return rec;
}

ShotRecord sample_operating_point(const InterferometerConfig& config, double t, long long m,
                                  std::uint64_t seed) {
  double p = apply_contrast(run_point(config, t), config.contrast);
  ShotRecord rec = sample_shots(p, m, seed);
  rec.operating_phi = config.delta_omega_z * t;
  rec.order = config.order;
  rec.contrast = config.contrast;
  return rec;
}

std::vector<double> bin_means(const ShotRecord& record, long long n_b) {
  auto m = static_cast<long long>(record.size());
  if (!(n_b > 2 && 2 * n_b < m))
    throw std::invalid_argument("bin_means: N_b must satisfy 2 < N_b < M/2");
  long long k = m / n_b;
  std::vector<double> means(static_cast<std::size_t>(k));
  for (long long i = 0; i < k; ++i) {
    double sum = 0.0;
    for (long long j = i * n_b; j < (i + 1) * n_b; ++j) sum += record.outcomes[j];
    means[static_cast<std::size_t>(i)] = sum / static_cast<double>(n_b);
  }
  return means;
}

double allan_variance(const std::vector<double>& bin_means) {
  std::size_t k = bin_means.size();
  if (k < 2) throw std::invalid_argument("allan_variance: need at least 2 bins");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    double d = bin_means[i + 1] - bin_means[i];
    acc += d * d;
  }
  return std::sqrt(acc / (2.0 * static_cast<double>(k - 1)));
}

double fringe_slope(const InterferometerConfig& config, double phi) {
  config.validate();
  return 0.5 * config.contrast * config.order * std::sin(config.order * phi);
}

double sensitivity(double sigma, double slope) {
  if (slope == 0.0)
    throw std::invalid_argument("sensitivity: zero slope (operating point at a fringe extremum)");
  return sigma / std::abs(slope);
}

double sql_curve(long long n_b) {
  if (n_b < 1) throw std::invalid_argument("sql_curve: N_b must be >= 1");
  return 1.0 / std::sqrt(static_cast<double>(n_b));
}

AllanResult allan_scan(const ShotRecord& record, const InterferometerConfig& config,
                       const std::vector<long long>& n_b_list) {
  AllanResult result;
  result.slope_used = fringe_slope(config, record.operating_phi);
  for (long long n_b : n_b_list) {
    double sigma = allan_variance(bin_means(record, n_b));
    result.rows.push_back({n_b, sigma, sensitivity(sigma, result.slope_used)});
  }
  return result;
}

std::string format_shot_record_text(const ShotRecord& record) {
  std::string out;
  out.reserve(record.size() + 1);
  for (auto b : record.outcomes) out += b ? '1' : '0';
  out += '\n';
  return out;
}

}  // namespace ionsim
