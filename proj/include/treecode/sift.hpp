#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "treecode/common.hpp"

namespace treecode {

// Row-major grayscale intensities in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  double at(int y, int x) const { return pixels[static_cast<size_t>(y) * width + x]; }
  double& at(int y, int x) { return pixels[static_cast<size_t>(y) * width + x]; }
  void validate() const;
};

// Spatial grid of fixed-length vectors, channel-contiguous per location.
struct FeatureMap {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int c)
      : width(w), height(h), channels(c), data(static_cast<size_t>(h) * w * c, 0.0) {}

  double* at(int y, int x) { return data.data() + (static_cast<size_t>(y) * width + x) * channels; }
  const double* at(int y, int x) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * channels;
  }
  double value(int y, int x, int c) const { return at(y, x)[c]; }
};

// 5x5 x/y derivative-of-Gaussian kernels (sigma 1.0), scaled to unit response
// on a unit-slope ramp. Both sum to zero.
struct GradKernels {
  std::array<std::array<double, 5>, 5> kx;  // kx[dy][dx]
  std::array<std::array<double, 5>, 5> ky;
  double l1_norm;  // identical for both kernels by symmetry

  static const GradKernels& instance();
};

struct Gradients {
  FeatureMap ix;  // 1 channel each, valid region: dims shrink by 4
  FeatureMap iy;
};

// Valid-region filtering with the derivative kernels.
Gradients gradients(const GrayImage& img, int threads = 1);

// Exact orientation response: magnitude times clamped cos^9 to each of the
// eight histogram directions n*pi/4.
std::array<double, 8> orientation_response(double ix, double iy);

// 500x500 table of orientation responses per gradient axis, with the grid
// sized from the kernel l1 norm so attainable gradients never need a bounds
// check. Bin centers are (i - 250) * width: a zero gradient hits an exact
// zero center and maps to an exactly zero response.
class OrientationLut {
 public:
  static constexpr int kBins = 500;

  OrientationLut();

  double range() const { return range_; }
  double bin_width() const { return 2.0 * range_ / kBins; }
  double bin_center(int i) const { return (i - kBins / 2) * bin_width(); }

  const double* lookup(double ix, double iy) const {
    return table_.data() + (static_cast<size_t>(bin_of(ix)) * kBins + bin_of(iy)) * 8;
  }

  int bin_of(double v) const {
    const int i = static_cast<int>(std::floor(v / bin_width() + 0.5)) + kBins / 2;
    return i < 0 ? 0 : (i >= kBins ? kBins - 1 : i);
  }

  // Worst-case |lut - exact| over a bin, from the Lipschitz constant of the
  // response (17) times the half-diagonal of a bin.
  double quantization_bound() const;

  static const OrientationLut& instance();

 private:
  double range_;
  std::vector<double> table_;  // kBins * kBins * 8
};

// Per-pixel 8-channel histogram via the lookup table.
FeatureMap orientation_histogram(const FeatureMap& ix, const FeatureMap& iy,
                                 const OrientationLut& lut, int threads = 1);

// Sum-of-4 downsampling by two in each direction (floor dims, trailing odd
// row/column dropped).
FeatureMap subsample2(const FeatureMap& fm, int threads = 1);

// [[1,1],[1,1]] filtering; dims shrink by one in each direction.
FeatureMap box_smooth(const FeatureMap& fm, int threads = 1);

// Scales v down to unit Euclidean norm when above it, guaranteeing the
// recomputed norm is <= 1 despite rounding.
void clamp_norm(double* v, int n);

// 128-channel descriptors: at (x, y), concatenate the 8-vectors at
// (x + 2i, y + 2j), j outer, i inner, i,j in 1..4, then clamp any norm above
// 1 back to 1. Locations whose stencil exits the map are not emitted, so
// dims shrink by 8.
FeatureMap assemble_sift(const FeatureMap& fm, int threads = 1);

// Full pipeline. Output dims from input h x w:
//   gradients   (h-4) x (w-4)
//   subsample2  floor/2
//   box_smooth  -1
//   assemble    -8
FeatureMap dense_sift(const GrayImage& img, int threads = 1);

// Descriptor grid dims for an h x w input, or {0, 0} when too small.
std::pair<int, int> dense_sift_dims(int height, int width);

}  // namespace treecode
