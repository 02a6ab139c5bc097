#pragma once

// Shared fixtures and independent oracles for the unit and acceptance suites.
// Every oracle here recomputes its answer from first principles (SVD solves,
// exhaustive scans, dense loops) so it stays independent of the library path
// it checks.

#include <Eigen/SVD>
#include <filesystem>
#include <string>
#include <vector>

#include "treecode/image_io.hpp"
#include "treecode/pipeline.hpp"

namespace testutil {

using treecode::Dictionary;
using treecode::FeatureMap;
using treecode::GrayImage;
using treecode::Mat;
using treecode::Rng;
using treecode::SparseFeatureGrid;
using treecode::Vec;

// ---------------------------------------------------------------------------
// scratch directories

class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() / ("treecode_" + name);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::filesystem::path path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// data generators

inline Dictionary random_dict(int d, int K, uint64_t seed) {
  Rng rng(seed);
  return Dictionary::random_unit(d, K, rng);
}

inline Mat random_matrix(int rows, int cols, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Mat m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = scale * rng.normal();
  }
  return m;
}

// Orthonormal dictionary from the QR factors of a random matrix.
inline Dictionary orthonormal_dict(int d, int K, uint64_t seed) {
  Mat m = random_matrix(d, d, seed);
  Eigen::HouseholderQR<Mat> qr(m);
  Mat Q = qr.householderQ();
  return Dictionary(Q.leftCols(K));
}

// Columns drawn from L disjoint q-dimensional orthonormal subspaces of R^d,
// noise-free: X = B_l * coeffs with per-column random subspace choice.
struct SubspaceData {
  Mat X;
  std::vector<int> subspace_of;
  Mat basis;  // d x (L*q), orthonormal columns, subspace l spans cols [l*q, (l+1)*q)
};

inline SubspaceData union_of_subspaces(int d, int L, int q, int per_subspace, uint64_t seed) {
  Rng rng(seed);
  Mat full = Mat(d, d);
  for (int c = 0; c < d; ++c) full.col(c) = rng.normal_vector(d);
  Eigen::HouseholderQR<Mat> qr(full);
  Mat Q = qr.householderQ();

  SubspaceData out;
  out.basis = Q.leftCols(L * q);
  out.X = Mat(d, L * per_subspace);
  out.subspace_of.resize(L * per_subspace);
  int col = 0;
  for (int l = 0; l < L; ++l) {
    for (int i = 0; i < per_subspace; ++i) {
      Vec z(q);
      for (int j = 0; j < q; ++j) z[j] = rng.normal();
      out.X.col(col) = out.basis.middleCols(l * q, q) * z;
      out.subspace_of[col] = l;
      ++col;
    }
  }
  return out;
}

// Heterogeneous 8x8 patches with means removed: mostly smooth gradients and
// blobs, a quarter oriented edges, a few rare pixel spikes. The rare content
// is what earns single-group specialist atoms.
inline Mat patch_data(int N, uint64_t seed) {
  Rng rng(seed);
  Mat X(64, N);
  for (int n = 0; n < N; ++n) {
    const double kind = rng.uniform();
    if (kind < 0.7) {
      const double gx = rng.normal(), gy = rng.normal();
      const double cx = rng.uniform(0, 8), cy = rng.uniform(0, 8);
      const double s = rng.uniform(2, 6), amp = 3.0 * rng.uniform(0.5, 1.5);
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          X(y * 8 + x, n) =
              gx * x + gy * y +
              amp * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * s * s));
        }
      }
    } else if (kind < 0.95) {
      const double th = rng.uniform(0, M_PI), off = rng.uniform(2, 6);
      const double sharp = rng.uniform(0.7, 3.0), amp = rng.uniform(1.0, 2.0);
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          X(y * 8 + x, n) = amp * std::tanh(sharp * (std::cos(th) * x + std::sin(th) * y - off));
        }
      }
    } else {
      const int sx = rng.uniform_int(8), sy = rng.uniform_int(8);
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          X(y * 8 + x, n) = (x == sx && y == sy) ? rng.uniform(2, 4) : 0.1 * rng.normal();
        }
      }
    }
    X.col(n).array() -= X.col(n).mean();
  }
  return X;
}

// ---------------------------------------------------------------------------
// pursuit oracles

// Exact least-squares residual on one support via SVD (no ridge, no shared
// code with the library solver).
inline double svd_residual2(const Vec& x, const Dictionary& dict, const std::vector<int>& support) {
  Mat W(dict.dim(), static_cast<int>(support.size()));
  for (size_t j = 0; j < support.size(); ++j) W.col(static_cast<int>(j)) = dict.atoms.col(support[j]);
  const Vec z = W.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(x);
  return (x - W * z).squaredNorm();
}

inline Vec svd_solve(const Mat& W, const Vec& x) {
  return W.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(x);
}

// Minimum residual over every support of size 1..q (and the empty support).
struct BruteForceResult {
  double best_error2;
  std::vector<int> best_support;
};

inline BruteForceResult brute_force_best_support(const Vec& x, const Dictionary& dict, int q) {
  BruteForceResult best{x.squaredNorm(), {}};
  const int K = dict.size();
  std::vector<int> support;
  // Enumerates all subsets of size <= q by recursion over the first atom.
  auto recurse = [&](auto&& self, int first) -> void {
    if (static_cast<int>(support.size()) == q) return;
    for (int a = first; a < K; ++a) {
      support.push_back(a);
      const double err = svd_residual2(x, dict, support);
      if (err < best.best_error2 - 0.0) {
        best.best_error2 = err;
        best.best_support = support;
      }
      self(self, a + 1);
      support.pop_back();
    }
  };
  recurse(recurse, 0);
  return best;
}

// ---------------------------------------------------------------------------
// SIFT oracles (independent dense loops)

inline FeatureMap naive_gradient(const GrayImage& img, bool x_direction) {
  const auto& k = treecode::GradKernels::instance();
  FeatureMap out(img.height - 4, img.width - 4, 1);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      double acc = 0.0;
      for (int dx = 0; dx < 5; ++dx) {
        for (int dy = 0; dy < 5; ++dy) {
          const double w = x_direction ? k.kx[dy][dx] : k.ky[dy][dx];
          acc += w * img.at(y + dy, x + dx);
        }
      }
      *out.at(y, x) = acc;
    }
  }
  return out;
}

inline FeatureMap naive_subsample2(const FeatureMap& fm) {
  FeatureMap out(fm.height / 2, fm.width / 2, fm.channels);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int n = 0; n < fm.channels; ++n) {
        out.at(y, x)[n] = fm.value(2 * y, 2 * x, n) + fm.value(2 * y, 2 * x + 1, n) +
                          fm.value(2 * y + 1, 2 * x, n) + fm.value(2 * y + 1, 2 * x + 1, n);
      }
    }
  }
  return out;
}

inline FeatureMap naive_box_smooth(const FeatureMap& fm) {
  FeatureMap out(fm.height - 1, fm.width - 1, fm.channels);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int n = 0; n < fm.channels; ++n) {
        out.at(y, x)[n] = fm.value(y, x, n) + fm.value(y, x + 1, n) + fm.value(y + 1, x, n) +
                          fm.value(y + 1, x + 1, n);
      }
    }
  }
  return out;
}

inline FeatureMap naive_assemble(const FeatureMap& fm) {
  FeatureMap out(fm.height - 8, fm.width - 8, 128);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      std::vector<double> v;
      v.reserve(128);
      for (int j = 1; j <= 4; ++j) {
        for (int i = 1; i <= 4; ++i) {
          for (int n = 0; n < 8; ++n) v.push_back(fm.value(y + 2 * j, x + 2 * i, n));
        }
      }
      treecode::clamp_norm(v.data(), 128);
      for (int n = 0; n < 128; ++n) out.at(y, x)[n] = v[n];
    }
  }
  return out;
}

// Seeded smooth random image in [0,1] (sum of a few sinusoids plus noise).
inline GrayImage random_image(int height, int width, uint64_t seed) {
  Rng rng(seed);
  GrayImage img;
  img.height = height;
  img.width = width;
  img.pixels.resize(static_cast<size_t>(width) * height);
  const double fx1 = rng.uniform(0.02, 0.2), fy1 = rng.uniform(0.02, 0.2);
  const double fx2 = rng.uniform(0.02, 0.3), fy2 = rng.uniform(0.02, 0.3);
  const double p1 = rng.uniform(0.0, 6.28), p2 = rng.uniform(0.0, 6.28);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double v = 0.5 + 0.2 * std::sin(fx1 * x + fy1 * y + p1) +
                       0.15 * std::sin(fx2 * x - fy2 * y + p2) + 0.05 * rng.uniform(-1.0, 1.0);
      img.at(y, x) = std::min(1.0, std::max(0.0, v));
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// pyramid oracle

// Dense max pooling: per level, max over present entries per region, zero
// only when the region holds no entry.
inline Vec dense_pool_oracle(const SparseFeatureGrid& grid) {
  const int nf = grid.n_f;
  const auto cy = treecode::pyramid_cell_map(grid.height);
  const auto cx = treecode::pyramid_cell_map(grid.width);

  auto level = [&](int cells_per_side) {
    std::vector<double> out(static_cast<size_t>(nf) * cells_per_side * cells_per_side, 0.0);
    std::vector<char> present(out.size(), 0);
    for (int y = 0; y < grid.height; ++y) {
      for (int x = 0; x < grid.width; ++x) {
        const int cyi = cy[y] * cells_per_side / 4;
        const int cxi = cx[x] * cells_per_side / 4;
        const int cell = cyi * cells_per_side + cxi;
        const size_t loc = static_cast<size_t>(y) * grid.width + x;
        for (uint64_t e = grid.offsets[loc]; e < grid.offsets[loc + 1]; ++e) {
          const size_t slot = static_cast<size_t>(grid.indices[e]) * cells_per_side * cells_per_side + cell;
          const double v = grid.values[e];
          if (!present[slot] || v > out[slot]) out[slot] = v;
          present[slot] = 1;
        }
      }
    }
    return out;
  };

  const auto l1 = level(1);
  const auto l2 = level(2);
  const auto l4 = level(4);
  Vec out(nf * 21);
  for (int f = 0; f < nf; ++f) out[f] = l1[f];
  for (int f = 0; f < nf; ++f) {
    for (int c = 0; c < 4; ++c) out[nf + f * 4 + c] = l2[static_cast<size_t>(f) * 4 + c];
  }
  for (int f = 0; f < nf; ++f) {
    for (int c = 0; c < 16; ++c) out[nf * 5 + f * 16 + c] = l4[static_cast<size_t>(f) * 16 + c];
  }
  return out;
}

// Random sparse grid with signed values.
inline SparseFeatureGrid random_grid(int nf, int height, int width, double density,
                                     uint64_t seed) {
  Rng rng(seed);
  SparseFeatureGrid grid;
  grid.n_f = nf;
  grid.height = height;
  grid.width = width;
  grid.offsets.assign(static_cast<size_t>(height) * width + 1, 0);
  for (int loc = 0; loc < height * width; ++loc) {
    for (int f = 0; f < nf; ++f) {
      if (rng.uniform() < density) {
        grid.indices.push_back(f);
        grid.values.push_back(static_cast<float>(rng.normal()));
      }
    }
    grid.offsets[loc + 1] = grid.indices.size();
  }
  return grid;
}

// ---------------------------------------------------------------------------
// grating corpus for desk-scale classification

// Writes count oriented-sinusoid PGM images per class into
// dir/<class_name>/img_###.pgm. Class c gets orientation angle_deg[c] with
// per-image frequency and phase jitter plus pixel noise.
inline void write_grating_corpus(const std::string& dir, const std::vector<double>& angle_deg,
                                 int count, int size, uint64_t seed) {
  Rng rng(seed);
  for (size_t c = 0; c < angle_deg.size(); ++c) {
    const auto class_dir = std::filesystem::path(dir) / ("class" + std::to_string(c));
    std::filesystem::create_directories(class_dir);
    const double theta = angle_deg[c] * M_PI / 180.0;
    for (int i = 0; i < count; ++i) {
      const double freq = rng.uniform(0.35, 0.55);
      const double phase = rng.uniform(0.0, 2.0 * M_PI);
      GrayImage img;
      img.width = size;
      img.height = size;
      img.pixels.resize(static_cast<size_t>(size) * size);
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const double t = freq * (std::cos(theta) * x + std::sin(theta) * y) + phase;
          const double v = 0.5 + 0.35 * std::sin(t) + 0.03 * rng.uniform(-1.0, 1.0);
          img.at(y, x) = std::min(1.0, std::max(0.0, v));
        }
      }
      char name[32];
      std::snprintf(name, sizeof(name), "img_%03d.pgm", i);
      treecode::write_pgm((class_dir / name).string(), img);
    }
  }
}

}  // namespace testutil
