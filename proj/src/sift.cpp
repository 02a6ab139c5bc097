#include "treecode/sift.hpp"

#include <cmath>

#include "treecode/parallel.hpp"

namespace treecode {

void GrayImage::validate() const {
  require(width >= 13 && height >= 13, "image smaller than 13x13");
  require(pixels.size() == static_cast<size_t>(width) * height, "pixel buffer size mismatch");
  for (double p : pixels) {
    if (!std::isfinite(p)) throw NumericError("image contains non-finite pixels");
  }
}

const GradKernels& GradKernels::instance() {
  static const GradKernels k = [] {
    GradKernels g{};
    constexpr double sigma = 1.0;
    double ramp_response = 0.0;
    for (int dy = -2; dy <= 2; ++dy) {
      for (int dx = -2; dx <= 2; ++dx) {
        const double w = dx * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        g.kx[dy + 2][dx + 2] = w;
        ramp_response += w * dx;
      }
    }
    double l1 = 0.0;
    for (auto& row : g.kx) {
      for (double& w : row) {
        w /= ramp_response;
        l1 += std::abs(w);
      }
    }
    for (int dy = -2; dy <= 2; ++dy) {
      for (int dx = -2; dx <= 2; ++dx) g.ky[dy + 2][dx + 2] = g.kx[dx + 2][dy + 2];
    }
    g.l1_norm = l1;
    return g;
  }();
  return k;
}

Gradients gradients(const GrayImage& img, int threads) {
  img.validate();
  const auto& k = GradKernels::instance();
  const int oh = img.height - 4;
  const int ow = img.width - 4;
  Gradients out{FeatureMap(oh, ow, 1), FeatureMap(oh, ow, 1)};

  parallel_for(oh, threads, [&](long long lo, long long hi) {
    for (long long y = lo; y < hi; ++y) {
      for (int x = 0; x < ow; ++x) {
        double gx = 0.0, gy = 0.0;
        for (int dy = 0; dy < 5; ++dy) {
          for (int dx = 0; dx < 5; ++dx) {
            const double p = img.at(static_cast<int>(y) + dy, x + dx);
            gx += k.kx[dy][dx] * p;
            gy += k.ky[dy][dx] * p;
          }
        }
        *out.ix.at(static_cast<int>(y), x) = gx;
        *out.iy.at(static_cast<int>(y), x) = gy;
      }
    }
  });
  return out;
}

std::array<double, 8> orientation_response(double ix, double iy) {
  std::array<double, 8> v{};
  const double m = std::sqrt(ix * ix + iy * iy);
  if (m == 0.0) return v;
  const double phi = std::atan2(iy, ix);
  for (int n = 0; n < 8; ++n) {
    const double c = std::cos(phi - n * (M_PI / 4.0));
    v[n] = c > 0.0 ? m * std::pow(c, 9.0) : 0.0;
  }
  return v;
}

OrientationLut::OrientationLut()
    : range_(GradKernels::instance().l1_norm),
      table_(static_cast<size_t>(kBins) * kBins * 8) {
  for (int i = 0; i < kBins; ++i) {
    for (int j = 0; j < kBins; ++j) {
      const auto v = orientation_response(bin_center(i), bin_center(j));
      double* dst = table_.data() + (static_cast<size_t>(i) * kBins + j) * 8;
      for (int n = 0; n < 8; ++n) dst[n] = v[n];
    }
  }
}

double OrientationLut::quantization_bound() const {
  // v(n) = u_+^9 / m^8 with u the projection onto the bin direction, so
  // |grad v| <= 9 (u/m)^8 + 8 (u/m)^9 <= 17.
  const double half_diag = 0.5 * std::sqrt(2.0) * bin_width();
  return 17.0 * half_diag;
}

const OrientationLut& OrientationLut::instance() {
  static const OrientationLut lut;
  return lut;
}

FeatureMap orientation_histogram(const FeatureMap& ix, const FeatureMap& iy,
                                 const OrientationLut& lut, int threads) {
  require(ix.width == iy.width && ix.height == iy.height, "gradient map shape mismatch");
  require(ix.channels == 1 && iy.channels == 1, "gradient maps must be single channel");
  FeatureMap out(ix.height, ix.width, 8);

  parallel_for(ix.height, threads, [&](long long lo, long long hi) {
    for (long long y = lo; y < hi; ++y) {
      for (int x = 0; x < ix.width; ++x) {
        const double* v = lut.lookup(*ix.at(static_cast<int>(y), x), *iy.at(static_cast<int>(y), x));
        double* dst = out.at(static_cast<int>(y), x);
        for (int n = 0; n < 8; ++n) dst[n] = v[n];
      }
    }
  });
  return out;
}

FeatureMap subsample2(const FeatureMap& fm, int threads) {
  require(fm.width >= 2 && fm.height >= 2, "map too small to subsample");
  const int oh = fm.height / 2;
  const int ow = fm.width / 2;
  FeatureMap out(oh, ow, fm.channels);

  parallel_for(oh, threads, [&](long long lo, long long hi) {
    for (long long y = lo; y < hi; ++y) {
      for (int x = 0; x < ow; ++x) {
        const int sy = 2 * static_cast<int>(y), sx = 2 * x;
        const double* a = fm.at(sy, sx);
        const double* b = fm.at(sy, sx + 1);
        const double* c = fm.at(sy + 1, sx);
        const double* d = fm.at(sy + 1, sx + 1);
        double* dst = out.at(static_cast<int>(y), x);
        for (int n = 0; n < fm.channels; ++n) dst[n] = a[n] + b[n] + c[n] + d[n];
      }
    }
  });
  return out;
}

FeatureMap box_smooth(const FeatureMap& fm, int threads) {
  require(fm.width >= 2 && fm.height >= 2, "map too small to smooth");
  const int oh = fm.height - 1;
  const int ow = fm.width - 1;
  FeatureMap out(oh, ow, fm.channels);

  parallel_for(oh, threads, [&](long long lo, long long hi) {
    for (long long y = lo; y < hi; ++y) {
      for (int x = 0; x < ow; ++x) {
        const int sy = static_cast<int>(y);
        const double* a = fm.at(sy, x);
        const double* b = fm.at(sy, x + 1);
        const double* c = fm.at(sy + 1, x);
        const double* d = fm.at(sy + 1, x + 1);
        double* dst = out.at(sy, x);
        for (int n = 0; n < fm.channels; ++n) dst[n] = a[n] + b[n] + c[n] + d[n];
      }
    }
  });
  return out;
}

void clamp_norm(double* v, int n) {
  double norm2 = 0.0;
  for (int i = 0; i < n; ++i) norm2 += v[i] * v[i];
  if (norm2 <= 1.0) return;
  const double scale = 1.0 / std::sqrt(norm2);
  for (int i = 0; i < n; ++i) v[i] *= scale;
  // Rounding can leave the rescaled norm an ulp above one; nudge down until
  // the recomputed norm honors the bound exactly.
  for (;;) {
    norm2 = 0.0;
    for (int i = 0; i < n; ++i) norm2 += v[i] * v[i];
    if (norm2 <= 1.0) return;
    for (int i = 0; i < n; ++i) v[i] *= 0.99999999999999989;
  }
}

FeatureMap assemble_sift(const FeatureMap& fm, int threads) {
  require(fm.channels == 8, "assemble expects 8 channels");
  require(fm.width >= 9 && fm.height >= 9, "map too small for the 4x4 stencil");
  const int oh = fm.height - 8;
  const int ow = fm.width - 8;
  FeatureMap out(oh, ow, 128);

  parallel_for(oh, threads, [&](long long lo, long long hi) {
    for (long long y = lo; y < hi; ++y) {
      for (int x = 0; x < ow; ++x) {
        double* dst = out.at(static_cast<int>(y), x);
        int c = 0;
        for (int j = 1; j <= 4; ++j) {
          for (int i = 1; i <= 4; ++i) {
            const double* src = fm.at(static_cast<int>(y) + 2 * j, x + 2 * i);
            for (int n = 0; n < 8; ++n) dst[c++] = src[n];
          }
        }
        clamp_norm(dst, 128);
      }
    }
  });
  return out;
}

std::pair<int, int> dense_sift_dims(int height, int width) {
  const int gh = height - 4, gw = width - 4;
  if (gh < 2 || gw < 2) return {0, 0};
  const int sh = gh / 2, sw = gw / 2;
  const int bh = sh - 1, bw = sw - 1;
  const int ah = bh - 8, aw = bw - 8;
  if (ah < 1 || aw < 1) return {0, 0};
  return {ah, aw};
}

FeatureMap dense_sift(const GrayImage& img, int threads) {
  const auto [oh, ow] = dense_sift_dims(img.height, img.width);
  require(oh >= 1 && ow >= 1, "image too small for any descriptor");
  const auto grads = gradients(img, threads);
  FeatureMap fm = orientation_histogram(grads.ix, grads.iy, OrientationLut::instance(), threads);
  fm = subsample2(fm, threads);
  fm = box_smooth(fm, threads);
  return assemble_sift(fm, threads);
}

}  // namespace treecode
