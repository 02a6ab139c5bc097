#pragma once

#include <vector>

#include "treecode/common.hpp"

namespace treecode {

// Multiclass linear scorer: score = weights * x + bias.
struct LinearModel {
  Mat weights;  // C x D
  Vec bias;     // C

  int classes() const { return static_cast<int>(weights.rows()); }
  int dim() const { return static_cast<int>(weights.cols()); }
};

struct FitOptions {
  double lambda = 1e-4;  // L2 strength on the weights (bias unregularized)
  int max_iter = 500;
  double tol = 1e-6;  // gradient norm target
};

struct FitTrace {
  std::vector<double> loss;  // per accepted step, nonincreasing
  double grad_norm = 0.0;
  int iterations = 0;
};

// Minimizes mean multinomial logistic loss + (lambda/2)||W||_F^2 by full-batch
// gradient descent with backtracking line search. Labels are 0-based class
// ids covering 0..C-1 with at least two classes present.
LinearModel fit(const Mat& features, const std::vector<int>& labels, const FitOptions& opts = {},
                FitTrace* trace = nullptr);

// Loss and gradient at the given parameters (exposed for the derivative
// checks).
double logistic_loss(const Mat& features, const std::vector<int>& labels, const LinearModel& m,
                     double lambda, Mat* grad_w = nullptr, Vec* grad_b = nullptr);

struct Predictions {
  std::vector<int> label;  // argmax score, ties to the smallest class id
  Mat scores;              // N x C
};

Predictions predict(const LinearModel& model, const Mat& features);

// Mean over classes of per-class accuracy. Classes never seen in labels are
// excluded with a warning on stderr.
double balanced_accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

}  // namespace treecode
