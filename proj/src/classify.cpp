#include "treecode/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace treecode {

namespace {

// Row-wise softmax with the max subtracted for stability.
Mat softmax_rows(const Mat& scores) {
  Mat p = scores;
  for (int n = 0; n < p.rows(); ++n) {
    const double m = p.row(n).maxCoeff();
    p.row(n) = (p.row(n).array() - m).exp();
    p.row(n) /= p.row(n).sum();
  }
  return p;
}

}  // namespace

double logistic_loss(const Mat& features, const std::vector<int>& labels, const LinearModel& m,
                     double lambda, Mat* grad_w, Vec* grad_b) {
  const int N = static_cast<int>(features.rows());
  Mat scores = features * m.weights.transpose();
  scores.rowwise() += m.bias.transpose();
  const Mat p = softmax_rows(scores);

  double loss = 0.0;
  for (int n = 0; n < N; ++n) {
    loss -= std::log(std::max(p(n, labels[n]), 1e-300));
  }
  loss = loss / N + 0.5 * lambda * m.weights.squaredNorm();

  if (grad_w || grad_b) {
    Mat delta = p;  // p - one_hot(y)
    for (int n = 0; n < N; ++n) delta(n, labels[n]) -= 1.0;
    delta /= static_cast<double>(N);
    if (grad_w) *grad_w = delta.transpose() * features + lambda * m.weights;
    if (grad_b) *grad_b = delta.colwise().sum().transpose();
  }
  return loss;
}

LinearModel fit(const Mat& features, const std::vector<int>& labels, const FitOptions& opts,
                FitTrace* trace) {
  const int N = static_cast<int>(features.rows());
  require(N >= 1 && static_cast<int>(labels.size()) == N, "one label per feature row required");
  if (!features.allFinite()) throw NumericError("features contain non-finite entries");

  int C = 0;
  for (int y : labels) {
    require(y >= 0, "negative class id");
    C = std::max(C, y + 1);
  }
  std::vector<int> counts(C, 0);
  for (int y : labels) ++counts[y];
  int present = 0;
  for (int c : counts) present += c > 0 ? 1 : 0;
  require(present >= 2, "training needs at least two classes");
  require(N >= C, "fewer rows than classes");

  LinearModel m;
  m.weights = Mat::Zero(C, features.cols());
  m.bias = Vec::Zero(C);

  Mat gw;
  Vec gb;
  double loss = logistic_loss(features, labels, m, opts.lambda, &gw, &gb);
  double step = 1.0;
  if (trace) trace->loss.push_back(loss);

  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const double gnorm = std::sqrt(gw.squaredNorm() + gb.squaredNorm());
    if (trace) trace->grad_norm = gnorm;
    if (gnorm <= opts.tol) break;

    // Armijo backtracking.
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      LinearModel cand;
      cand.weights = m.weights - step * gw;
      cand.bias = m.bias - step * gb;
      const double cand_loss = logistic_loss(features, labels, cand, opts.lambda);
      if (cand_loss <= loss - 1e-4 * step * gnorm * gnorm) {
        m = std::move(cand);
        loss = cand_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step underflowed; gradient is numerically flat
    if (trace) trace->loss.push_back(loss);
    loss = logistic_loss(features, labels, m, opts.lambda, &gw, &gb);
    step *= 2.0;
  }
  if (trace) trace->iterations = it;
  return m;
}

Predictions predict(const LinearModel& model, const Mat& features) {
  require(features.cols() == model.dim(), "feature dimension mismatch");
  Predictions out;
  out.scores = features * model.weights.transpose();
  out.scores.rowwise() += model.bias.transpose();
  out.label.resize(features.rows());
  for (int n = 0; n < features.rows(); ++n) {
    int best = 0;
    for (int c = 1; c < model.classes(); ++c) {
      if (out.scores(n, c) > out.scores(n, best)) best = c;
    }
    out.label[n] = best;
  }
  return out;
}

double balanced_accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  require(preds.size() == labels.size(), "prediction/label length mismatch");
  require(!labels.empty(), "no labels");
  int C = 0;
  for (int y : labels) C = std::max(C, y + 1);
  for (int y : preds) C = std::max(C, y + 1);

  std::vector<long long> total(C, 0), correct(C, 0);
  for (size_t n = 0; n < labels.size(); ++n) {
    ++total[labels[n]];
    if (preds[n] == labels[n]) ++correct[labels[n]];
  }
  double sum = 0.0;
  int classes = 0;
  for (int c = 0; c < C; ++c) {
    if (total[c] == 0) {
      std::fprintf(stderr, "balanced_accuracy: class %d absent from labels, excluded\n", c);
      continue;
    }
    sum += static_cast<double>(correct[c]) / static_cast<double>(total[c]);
    ++classes;
  }
  return sum / classes;
}

}  // namespace treecode
