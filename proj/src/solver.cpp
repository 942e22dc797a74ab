#include "drmrr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "drmrr/random.hpp"

namespace drmrr {

NormOrder ConjugateOrder(NormOrder r) {
  switch (r) {
    case NormOrder::kOne:
      return NormOrder::kInf;
    case NormOrder::kTwo:
      return NormOrder::kTwo;
    case NormOrder::kInf:
      return NormOrder::kOne;
  }
  throw std::logic_error("bad norm order");
}

std::string NormOrderName(NormOrder r) {
  switch (r) {
    case NormOrder::kOne:
      return "1";
    case NormOrder::kTwo:
      return "2";
    case NormOrder::kInf:
      return "inf";
  }
  throw std::logic_error("bad norm order");
}

NormOrder NormOrderFromString(const std::string& name) {
  if (name == "1") return NormOrder::kOne;
  if (name == "2") return NormOrder::kTwo;
  if (name == "inf") return NormOrder::kInf;
  throw std::invalid_argument("unknown norm order: " + name);
}

Eigen::MatrixXd BTildePrime(const Eigen::MatrixXd& B) {
  const Eigen::Index p = B.rows();
  const Eigen::Index k = B.cols();
  Eigen::MatrixXd stacked(p + k, k);
  stacked.topRows(p) = -B;
  stacked.bottomRows(k) = Eigen::MatrixXd::Identity(k, k);
  return stacked;
}

namespace {

double VectorNorm(const Eigen::VectorXd& v, NormOrder r) {
  switch (r) {
    case NormOrder::kOne:
      return v.lpNorm<1>();
    case NormOrder::kTwo:
      return v.norm();
    case NormOrder::kInf:
      return v.lpNorm<Eigen::Infinity>();
  }
  throw std::logic_error("bad norm order");
}

// Largest eigenvalue of a symmetric PSD matrix and its eigenvector, by
// power iteration from a seed-derived start vector. The Rayleigh stop rule
// alone cannot separate near-equal leading eigenvalues in any useful
// budget, so the result is certified by the eigenpair residual; an
// uncertifiable near-tie is settled exactly with a dense symmetric solve.
double PowerIterationTopEig(const Eigen::MatrixXd& gram, int power_iters,
                            uint64_t seed, Eigen::VectorXd* eigvec) {
  const Eigen::Index n = gram.rows();
  if (gram.cwiseAbs().maxCoeff() == 0.0) {
    if (eigvec) eigvec->setZero(n);
    return 0.0;
  }
  Rng rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.Uniform(-1.0, 1.0);
  v.normalize();

  Eigen::VectorXd z(n);
  z.noalias() = gram * v;
  double lambda = v.dot(z);
  for (int iter = 0; iter < power_iters; ++iter) {
    const double z_norm = z.norm();
    if (z_norm == 0.0) {
      // Start vector landed in the null space; reseed.
      for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.Uniform(-1.0, 1.0);
      v.normalize();
      z.noalias() = gram * v;
      lambda = v.dot(z);
      continue;
    }
    v = z / z_norm;
    z.noalias() = gram * v;
    const double next = v.dot(z);
    if (std::abs(next - lambda) <= 1e-10 * std::max(1.0, std::abs(next))) {
      // The Rayleigh quotient has settled, but its stall is only sound if
      // the eigenpair residual confirms the vector: polish until it does.
      lambda = next;
      int budget = std::min(power_iters - iter - 1, 700);
      double residual = (z - lambda * v).norm();
      while (budget-- > 0 && residual > 1e-11 * std::max(1.0, lambda)) {
        v = z / z.norm();
        z.noalias() = gram * v;
        lambda = v.dot(z);
        residual = (z - lambda * v).norm();
      }
      if (residual > 1e-11 * std::max(1.0, lambda)) {
        // Near-tied leading eigenvalues: the eigenvector is ill-determined
        // at any budget, but the eigenvalue is not; settle both densely.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        if (es.info() != Eigen::Success) {
          throw std::runtime_error("dense eigenvalue fallback failed");
        }
        if (eigvec) *eigvec = es.eigenvectors().col(n - 1);
        return es.eigenvalues()(n - 1);
      }
      if (eigvec) *eigvec = v;
      return lambda;
    }
    lambda = next;
  }
  throw std::runtime_error(
      "power iteration did not converge; last eigenvalue estimate " +
      std::to_string(lambda));
}

// Top singular value of B and its right singular vector.
double TopSingular(const Eigen::MatrixXd& B, int power_iters, uint64_t seed,
                   Eigen::VectorXd* right) {
  const double lambda =
      PowerIterationTopEig(B.transpose() * B, power_iters, seed, right);
  return std::sqrt(std::max(0.0, lambda));
}

int ArgMaxAbsLowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (int j = 1; j < v.size(); ++j) {
    if (std::abs(v(j)) > std::abs(v(best))) best = j;
  }
  return best;
}

double SignOf(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

Eigen::MatrixXd AugmentOnes(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd out(X.rows(), X.cols() + 1);
  out.leftCols(X.cols()) = X;
  out.col(X.cols()).setOnes();
  return out;
}

}  // namespace

double InducedNorm(const Eigen::MatrixXd& M, NormOrder s, int power_iters,
                   uint64_t seed) {
  switch (s) {
    case NormOrder::kOne:
      return M.cwiseAbs().colwise().sum().maxCoeff();
    case NormOrder::kInf:
      return M.cwiseAbs().rowwise().sum().maxCoeff();
    case NormOrder::kTwo: {
      const double lambda = PowerIterationTopEig(M.transpose() * M,
                                                 power_iters, seed, nullptr);
      return std::sqrt(std::max(0.0, lambda));
    }
  }
  throw std::logic_error("bad norm order");
}

double Objective(const Eigen::MatrixXd& B, const TrainingSet& data,
                 double epsilon, NormOrder r, int power_iters,
                 uint64_t seed) {
  if (data.X.rows() != data.Theta.rows()) {
    throw std::invalid_argument("X and Theta row counts differ");
  }
  if (data.X.cols() != B.rows() || data.Theta.cols() != B.cols()) {
    throw std::invalid_argument("B dimensions do not match the data");
  }
  const Eigen::MatrixXd residuals = data.Theta - data.X * B;  // N x K
  double loss = 0.0;
  for (Eigen::Index i = 0; i < residuals.rows(); ++i) {
    loss += VectorNorm(residuals.row(i).transpose(), r);
  }
  loss /= data.N();
  if (epsilon > 0.0) {
    const NormOrder s = ConjugateOrder(r);
    if (s == NormOrder::kTwo) {
      // sigma_max([-B; I]) = sqrt(1 + sigma_max(B)^2); iterating on B'B
      // instead of the shifted stacked gram converges faster because the
      // +1 shift shrinks the relative eigenvalue gap.
      const double sigma = TopSingular(B, power_iters, seed, nullptr);
      loss += epsilon * std::sqrt(1.0 + sigma * sigma);
    } else {
      loss += epsilon * InducedNorm(BTildePrime(B), s, power_iters, seed);
    }
  }
  return loss;
}

Eigen::MatrixXd Subgradient(const Eigen::MatrixXd& B, const TrainingSet& data,
                            double epsilon, NormOrder r, int power_iters,
                            uint64_t seed) {
  const Eigen::Index p = B.rows();
  const Eigen::Index k = B.cols();
  const Eigen::MatrixXd residuals = data.Theta - data.X * B;  // N x K

  // d/dB of ||theta_i - B'x_i||_r summed over samples: -x_i g_i' with g_i
  // a subgradient of the vector norm at the residual.
  Eigen::MatrixXd norm_grads = Eigen::MatrixXd::Zero(residuals.rows(), k);
  for (Eigen::Index i = 0; i < residuals.rows(); ++i) {
    const Eigen::VectorXd v = residuals.row(i).transpose();
    switch (r) {
      case NormOrder::kTwo: {
        const double norm = v.norm();
        if (norm > 0.0) norm_grads.row(i) = v.transpose() / norm;
        break;
      }
      case NormOrder::kOne: {
        for (Eigen::Index j = 0; j < k; ++j) {
          norm_grads(i, j) = SignOf(v(j));
        }
        break;
      }
      case NormOrder::kInf: {
        if (VectorNorm(v, NormOrder::kInf) > 0.0) {
          const int j = ArgMaxAbsLowest(v);
          norm_grads(i, j) = SignOf(v(j));
        }
        break;
      }
    }
  }
  Eigen::MatrixXd grad =
      -(data.X.transpose() * norm_grads) / static_cast<double>(data.N());

  if (epsilon > 0.0) {
    switch (ConjugateOrder(r)) {
      case NormOrder::kTwo: {
        // sigma_max([-B; I]) = sqrt(1 + sigma_max(B)^2); chain rule through
        // the top singular pair of B. Zero matrix at sigma_max(B) = 0.
        Eigen::VectorXd v1;
        const double sigma = TopSingular(B, power_iters, seed, &v1);
        if (sigma > 0.0) {
          const Eigen::VectorXd u1 = B * v1 / sigma;
          grad += epsilon * (sigma / std::sqrt(1.0 + sigma * sigma)) * u1 *
                  v1.transpose();
        }
        break;
      }
      case NormOrder::kInf: {
        // max row abs sum of [-B; I]: the identity rows pin the norm at 1
        // unless some row of |B| exceeds it.
        int best_row = 0;
        double best_sum = 0.0;
        for (Eigen::Index i = 0; i < p; ++i) {
          const double s = B.row(i).cwiseAbs().sum();
          if (s > best_sum) {
            best_sum = s;
            best_row = static_cast<int>(i);
          }
        }
        if (best_sum > 1.0) {
          for (Eigen::Index j = 0; j < k; ++j) {
            grad(best_row, j) += epsilon * SignOf(B(best_row, j));
          }
        }
        break;
      }
      case NormOrder::kOne: {
        // max column abs sum of [-B; I] = 1 + max_k ||B col k||_1.
        int best_col = 0;
        double best_sum = B.col(0).cwiseAbs().sum();
        for (Eigen::Index j = 1; j < k; ++j) {
          const double s = B.col(j).cwiseAbs().sum();
          if (s > best_sum) {
            best_sum = s;
            best_col = static_cast<int>(j);
          }
        }
        for (Eigen::Index i = 0; i < p; ++i) {
          grad(i, best_col) += epsilon * SignOf(B(i, best_col));
        }
        break;
      }
    }
  }
  return grad;
}

ModelWeights Fit(const TrainingSet& data, double epsilon, NormOrder r,
                 const SolverConfig& config) {
  if (data.N() < 1) throw std::invalid_argument("empty training set");
  TrainingSet work;
  work.X = config.augment_bias ? AugmentOnes(data.X) : data.X;
  work.Theta = data.Theta;

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(work.X.cols(), work.Theta.cols());
  double best = Objective(B, work, epsilon, r, config.power_iters,
                          config.seed);
  if (!std::isfinite(best)) {
    throw std::runtime_error("non-finite objective at B = 0");
  }
  Eigen::MatrixXd best_B = B;
  double window_best = best;

  for (int t = 1; t <= config.max_iters; ++t) {
    const Eigen::MatrixXd g = Subgradient(B, work, epsilon, r,
                                          config.power_iters, config.seed);
    B -= (config.eta0 / std::sqrt(static_cast<double>(t))) * g;
    const double f = Objective(B, work, epsilon, r, config.power_iters,
                               config.seed);
    if (!std::isfinite(f)) {
      throw std::runtime_error("non-finite objective at iteration " +
                               std::to_string(t));
    }
    if (f < best) {
      best = f;
      best_B = B;
    }
    if (t % config.stall_window == 0) {
      if (window_best - best < config.tol * std::max(1.0, std::abs(window_best))) {
        break;
      }
      window_best = best;
    }
  }

  ModelWeights weights;
  weights.B = best_B;
  weights.r = r;
  weights.epsilon = epsilon;
  return weights;
}

Eigen::MatrixXd PredictGtd(const ModelWeights& weights,
                           const Eigen::MatrixXd& X_test) {
  if (X_test.cols() != weights.B.rows()) {
    throw std::invalid_argument(
        "feature dimension mismatch: X has " + std::to_string(X_test.cols()) +
        " columns, model expects " + std::to_string(weights.B.rows()));
  }
  return X_test * weights.B;
}

WorstCaseReport WorstCaseBoundCheck(const ModelWeights& weights,
                                    const TrainingSet& data, double epsilon,
                                    NormOrder r, int n_samples,
                                    uint64_t seed) {
  const int n = data.N();
  const Eigen::Index p = data.X.cols();
  const Eigen::Index k = data.Theta.cols();
  const Eigen::MatrixXd b_tilde = BTildePrime(weights.B).transpose();  // K x (p+K)

  const auto point_loss = [&](const Eigen::VectorXd& z) {
    return VectorNorm(b_tilde * z, r);
  };
  const auto mean_loss = [&](const Eigen::MatrixXd& Z) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += point_loss(Z.row(i).transpose());
    return total / n;
  };

  Eigen::MatrixXd Z(n, p + k);  // support points z_i = (x_i, theta_i)
  Z.leftCols(p) = data.X;
  Z.rightCols(k) = data.Theta;

  WorstCaseReport report;
  report.empirical_loss = mean_loss(Z);
  report.regularized_objective =
      Objective(weights.B, data, epsilon, r, kDefaultPowerIters, seed);
  report.max_sampled_loss = report.empirical_loss;
  report.n_samples = n_samples;

  Rng rng(seed);
  const auto random_direction = [&](Eigen::VectorXd* d) {
    for (Eigen::Index j = 0; j < d->size(); ++j) (*d)(j) = rng.Gaussian();
    const double norm = VectorNorm(*d, r);
    if (norm > 0.0) *d /= norm;
  };
  // Steepest local increase of the point loss, normalized in the r-norm so
  // a magnitude-m shift costs exactly m of transport budget.
  const auto ascent_direction = [&](const Eigen::VectorXd& z,
                                    Eigen::VectorXd* d) {
    const Eigen::VectorXd v = b_tilde * z;
    const double v_norm = v.norm();
    if (v_norm == 0.0) {
      random_direction(d);
      return;
    }
    *d = b_tilde.transpose() * (v / v_norm);
    const double norm = VectorNorm(*d, r);
    if (norm > 0.0) {
      *d /= norm;
    } else {
      random_direction(d);
    }
  };

  for (int s = 0; s < n_samples; ++s) {
    Eigen::MatrixXd shifted = Z;
    Eigen::VectorXd d(p + k);
    switch (s % 4) {
      case 0: {  // random directions, full budget spread evenly
        for (int i = 0; i < n; ++i) {
          random_direction(&d);
          shifted.row(i) += epsilon * d.transpose();
        }
        break;
      }
      case 1: {  // random directions, random magnitudes with mean epsilon
        Eigen::VectorXd mags(n);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
          mags(i) = rng.Uniform01();
          total += mags(i);
        }
        if (total > 0.0) mags *= epsilon * n / total;
        for (int i = 0; i < n; ++i) {
          random_direction(&d);
          shifted.row(i) += mags(i) * d.transpose();
        }
        break;
      }
      case 2: {  // gradient-aligned, line-searched fraction of the budget
        const double scale = epsilon * (0.25 + 0.75 * rng.Uniform01());
        for (int i = 0; i < n; ++i) {
          ascent_direction(Z.row(i).transpose(), &d);
          shifted.row(i) += scale * d.transpose();
        }
        break;
      }
      case 3: {  // whole budget concentrated on one point
        const int i = rng.UniformInt(n);
        ascent_direction(Z.row(i).transpose(), &d);
        shifted.row(i) += (epsilon * n) * d.transpose();
        break;
      }
    }
    report.max_sampled_loss =
        std::max(report.max_sampled_loss, mean_loss(shifted));
  }
  report.bound_holds =
      report.max_sampled_loss <= report.regularized_objective + 1e-9;
  return report;
}

void SaveModel(const ModelWeights& weights, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["p"] = weights.B.rows();
  j["K"] = weights.B.cols();
  j["r"] = NormOrderName(weights.r);
  j["epsilon"] = weights.epsilon;
  std::vector<double> entries;
  entries.reserve(weights.B.size());
  for (Eigen::Index i = 0; i < weights.B.rows(); ++i) {
    for (Eigen::Index jcol = 0; jcol < weights.B.cols(); ++jcol) {
      entries.push_back(weights.B(i, jcol));
    }
  }
  j["B"] = entries;  // row-major
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << j.dump(2) << '\n';
}

ModelWeights LoadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read model file: " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("format_version").get<int>() != 1) {
    throw std::runtime_error("unsupported model format version");
  }
  ModelWeights weights;
  const auto p = j.at("p").get<Eigen::Index>();
  const auto k = j.at("K").get<Eigen::Index>();
  weights.r = NormOrderFromString(j.at("r").get<std::string>());
  weights.epsilon = j.at("epsilon").get<double>();
  const auto entries = j.at("B").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(entries.size()) != p * k) {
    throw std::runtime_error("model file B entry count mismatch");
  }
  weights.B.resize(p, k);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index jcol = 0; jcol < k; ++jcol) {
      weights.B(i, jcol) = entries[i * k + jcol];
    }
  }
  return weights;
}

}  // namespace drmrr
