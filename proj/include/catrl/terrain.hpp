#pragma once

// 1-D procedural terrain: a sum of sinusoids plus per-cell uniform noise on a
// regular grid, smoothed with a 3-tap kernel and rescaled so the height never
// exceeds max_amplitude.  Queries interpolate linearly between grid points
// and clamp to the edge values outside the grid.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "catrl/random.hpp"

namespace catrl {

struct TerrainParams {
  std::vector<double> amplitudes = {0.05, 0.03};
  std::vector<double> wavelengths = {2.0, 0.9};
  double noise_scale = 0.01;     // uniform per-grid-cell noise, m
  double max_amplitude = 0.15;   // |h| bound after smoothing, m
  double half_length = 6.0;      // grid spans [-half_length, half_length]
  double spacing = 0.05;         // grid resolution, m
  bool flat = false;             // zero heights (overrides everything else)

  void validate() const {
    if (amplitudes.size() != wavelengths.size())
      throw std::invalid_argument("terrain: amplitudes/wavelengths size mismatch");
    for (double a : amplitudes)
      if (a < 0.0) throw std::invalid_argument("terrain: negative amplitude");
    for (double w : wavelengths)
      if (w <= 0.0) throw std::invalid_argument("terrain: wavelength must be positive");
    if (noise_scale < 0.0) throw std::invalid_argument("terrain: negative noise scale");
    if (max_amplitude <= 0.0) throw std::invalid_argument("terrain: max_amplitude must be positive");
    if (spacing <= 0.0 || half_length <= spacing)
      throw std::invalid_argument("terrain: bad grid extents");
  }
};

class TerrainField {
  struct Raw {};
  explicit TerrainField(Raw) {}

 public:
  TerrainField() { *this = generate(0, TerrainParams{.flat = true}); }

  static TerrainField generate(std::uint64_t seed, const TerrainParams& params) {
    params.validate();
    TerrainField t{Raw{}};
    t.params_ = params;
    t.spacing_ = params.spacing;
    t.x0_ = -params.half_length;
    const int n = static_cast<int>(std::round(2.0 * params.half_length / params.spacing)) + 1;
    t.heights_.assign(n, 0.0);
    if (params.flat) return t;

    RandomStream rng(seed);
    std::vector<double> phases(params.amplitudes.size());
    for (auto& p : phases) p = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    std::vector<double> raw(n, 0.0);
    for (int i = 0; i < n; ++i) {
      const double x = t.x0_ + i * t.spacing_;
      double h = 0.0;
      for (std::size_t k = 0; k < params.amplitudes.size(); ++k)
        h += params.amplitudes[k] *
             std::sin(2.0 * 3.14159265358979323846 * x / params.wavelengths[k] + phases[k]);
      h += rng.uniform(-params.noise_scale, params.noise_scale);
      raw[i] = h;
    }
    // 3-tap [1 2 1]/4 smoothing, ends clamped
    for (int i = 0; i < n; ++i) {
      const double left = raw[std::max(0, i - 1)];
      const double right = raw[std::min(n - 1, i + 1)];
      t.heights_[i] = 0.25 * left + 0.5 * raw[i] + 0.25 * right;
    }
    // rescale if the bound is exceeded so |h| <= max_amplitude holds exactly
    double peak = 0.0;
    for (double h : t.heights_) peak = std::max(peak, std::abs(h));
    if (peak > params.max_amplitude) {
      const double s = params.max_amplitude / peak;
      for (auto& h : t.heights_) h *= s;
    }
    return t;
  }

  double height(double x) const {
    const double u = (x - x0_) / spacing_;
    const int n = static_cast<int>(heights_.size());
    if (u <= 0.0) return heights_.front();
    if (u >= n - 1) return heights_.back();
    const int i = static_cast<int>(u);
    const double f = u - i;
    return heights_[i] * (1.0 - f) + heights_[i + 1] * f;
  }

  // piecewise-constant derivative of the interpolant
  double slope(double x) const {
    const double u = (x - x0_) / spacing_;
    const int n = static_cast<int>(heights_.size());
    if (u <= 0.0 || u >= n - 1) return 0.0;
    const int i = static_cast<int>(u);
    return (heights_[i + 1] - heights_[i]) / spacing_;
  }

  double max_abs_height() const {
    double peak = 0.0;
    for (double h : heights_) peak = std::max(peak, std::abs(h));
    return peak;
  }

  const TerrainParams& params() const { return params_; }
  const std::vector<double>& grid() const { return heights_; }
  double spacing() const { return spacing_; }

 private:
  TerrainParams params_;
  std::vector<double> heights_;
  double x0_ = 0.0;
  double spacing_ = 0.05;
};

}  // namespace catrl
