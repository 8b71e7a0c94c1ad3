#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uavrf/error.hpp"
#include "uavrf/features.hpp"

namespace uavrf {

/// Regularised neighbourhood component analysis for feature weighting.
///
/// Sample j is a stochastic neighbour of i with probability proportional to
/// exp(-d_w(i,j) / kernel_width), where d_w(i,j) = sum_r w_r^2 |x_ir - x_jr|.
/// p_i is the leave-one-out probability that i's neighbour shares its label,
/// and fitting maximises
///
///   f(w) = mean_i p_i - lambda * sum_r w_r^2.
///
/// Features are expected to be standardised beforehand.
struct NcaConfig {
  double lambda = -1.0;  // < 0 selects 1 / N
  double kernel_width = 1.0;
  int max_iters = 200;
  double initial_step = 1.0;
  double tolerance = 1e-8;  // relative objective change that ends the ascent
};

struct NcaModel {
  Eigen::VectorXd weights;  // |w_r|, one per feature
  double lambda = 0.0;
  double kernel_width = 1.0;
  std::vector<double> loo_probs;
  std::vector<double> objective_trace;  // f(w) at every accepted iterate
  int iterations = 0;
};

struct NcaEvaluation {
  double objective = 0.0;
  Eigen::VectorXd gradient;
  std::vector<double> loo_probs;
};

namespace detail {

inline void check_nca_inputs(const Eigen::MatrixXd& x, std::span<const int> y) {
  require(x.rows() >= 2, ErrorCode::TooFewSamples, "NCA needs at least 2 samples");
  require(static_cast<std::size_t>(x.rows()) == y.size(), ErrorCode::ArityMismatch, "label count != sample count");
  const std::set<int> classes(y.begin(), y.end());
  require(classes.size() >= 2, ErrorCode::SingleClass, "NCA needs at least 2 classes");
}

}  // namespace detail

/// Objective, gradient with respect to w, and the per-sample LOO probabilities.
inline NcaEvaluation nca_evaluate(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w,
                                  double lambda, double kernel_width, bool with_gradient = true) {
  detail::check_nca_inputs(x, y);
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  require(w.size() == p, ErrorCode::ArityMismatch, "weight vector length != feature count");
  require(kernel_width > 0.0, ErrorCode::InvalidArgument, "kernel width must be positive");

  const Eigen::VectorXd w2 = w.cwiseProduct(w);
  NcaEvaluation ev;
  ev.loo_probs.assign(static_cast<std::size_t>(n), 0.0);
  Eigen::VectorXd grad_acc = Eigen::VectorXd::Zero(p);

  std::vector<double> dist(static_cast<std::size_t>(n));
  std::vector<double> prob(static_cast<std::size_t>(n));
  Eigen::VectorXd all_term(p), same_term(p);
  double p_sum = 0.0;

  for (Eigen::Index i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = 0.0;
      for (Eigen::Index r = 0; r < p; ++r) d += w2[r] * std::abs(x(i, r) - x(j, r));
      dist[j] = d;
      dmin = std::min(dmin, d);
    }
    double z = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      prob[j] = std::exp(-(dist[j] - dmin) / kernel_width);
      z += prob[j];
    }
    double pi = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      prob[j] /= z;
      if (y[j] == y[i]) pi += prob[j];
    }
    ev.loo_probs[i] = pi;
    p_sum += pi;

    if (with_gradient) {
      all_term.setZero();
      same_term.setZero();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        for (Eigen::Index r = 0; r < p; ++r) {
          const double t = prob[j] * std::abs(x(i, r) - x(j, r));
          all_term[r] += t;
          if (y[j] == y[i]) same_term[r] += t;
        }
      }
      grad_acc += pi * all_term - same_term;
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  ev.objective = p_sum * inv_n - lambda * w2.sum();
  if (with_gradient) {
    ev.gradient = (2.0 / kernel_width) * inv_n * w.cwiseProduct(grad_acc) - 2.0 * lambda * w;
  }
  return ev;
}

/// Gradient ascent from w = 1 with a backtracking step: a step is accepted
/// only if it does not lower f, so the trace is non-decreasing.
inline NcaModel nca_fit(const Eigen::MatrixXd& x, std::span<const int> y, const NcaConfig& cfg = {}) {
  detail::check_nca_inputs(x, y);
  require(cfg.max_iters >= 0 && cfg.initial_step > 0.0, ErrorCode::BadConfig, "bad NCA iteration settings");
  NcaModel m;
  m.kernel_width = cfg.kernel_width;
  m.lambda = cfg.lambda >= 0.0 ? cfg.lambda : 1.0 / static_cast<double>(x.rows());

  Eigen::VectorXd w = Eigen::VectorXd::Ones(x.cols());
  NcaEvaluation cur = nca_evaluate(x, y, w, m.lambda, m.kernel_width);
  require(std::isfinite(cur.objective), ErrorCode::NonFiniteObjective, "NCA objective is not finite");
  m.objective_trace.push_back(cur.objective);

  double step = cfg.initial_step;
  constexpr double kMinStep = 1e-12;
  bool converged = false;
  for (int it = 0; it < cfg.max_iters && !converged; ++it) {
    if (cur.gradient.norm() < 1e-12) break;
    bool accepted = false;
    while (step >= kMinStep) {
      const Eigen::VectorXd trial_w = w + step * cur.gradient;
      NcaEvaluation trial = nca_evaluate(x, y, trial_w, m.lambda, m.kernel_width);
      require(std::isfinite(trial.objective), ErrorCode::NonFiniteObjective, "NCA objective is not finite");
      if (trial.objective >= cur.objective) {
        const double gain = trial.objective - cur.objective;
        w = trial_w;
        cur = std::move(trial);
        m.objective_trace.push_back(cur.objective);
        accepted = true;
        step *= 1.5;
        ++m.iterations;
        converged = gain <= cfg.tolerance * std::max(1.0, std::abs(cur.objective));
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  m.weights = w.cwiseAbs();
  m.loo_probs = std::move(cur.loo_probs);
  return m;
}

/// Features whose weight reaches threshold_frac of the largest; never empty.
inline std::vector<std::size_t> select_features(const NcaModel& m, double threshold_frac = 0.1) {
  require(m.weights.size() > 0, ErrorCode::Empty, "model has no weights");
  require(threshold_frac > 0.0 && threshold_frac < 1.0, ErrorCode::InvalidArgument, "threshold must be in (0,1)");
  Eigen::Index top = 0;
  const double wmax = m.weights.maxCoeff(&top);
  std::vector<std::size_t> keep;
  for (Eigen::Index r = 0; r < m.weights.size(); ++r) {
    if (m.weights[r] >= threshold_frac * wmax) keep.push_back(static_cast<std::size_t>(r));
  }
  if (keep.empty()) keep.push_back(static_cast<std::size_t>(top));
  return keep;
}

inline void write_weights_csv(std::ostream& out, const Eigen::VectorXd& weights,
                              std::span<const char* const> names = kFeatureNames) {
  out.precision(17);
  out << "feature,weight\n";
  for (Eigen::Index r = 0; r < weights.size(); ++r) {
    const std::string name = static_cast<std::size_t>(r) < names.size() ? names[r] : "f" + std::to_string(r);
    out << name << ',' << weights[r] << '\n';
  }
}

}  // namespace uavrf
