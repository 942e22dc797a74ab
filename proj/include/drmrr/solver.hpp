#ifndef DRMRR_SOLVER_HPP_
#define DRMRR_SOLVER_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <string>

namespace drmrr {

/*! \brief Residual/transport norm order; the regularizer always uses the
 * Hoelder conjugate. */
enum class NormOrder { kOne, kTwo, kInf };

NormOrder ConjugateOrder(NormOrder r);
std::string NormOrderName(NormOrder r);
NormOrder NormOrderFromString(const std::string& name);

/*! \brief Trained multi-output scorer: column k of B maps features to the
 * k-th importance level. */
struct ModelWeights {
  Eigen::MatrixXd B;  // p x K
  NormOrder r = NormOrder::kTwo;
  double epsilon = 0.0;
};

/*! \brief Stacked training data: row i of X and Theta belong to the same
 * document. */
struct TrainingSet {
  Eigen::MatrixXd X;      // N x p
  Eigen::MatrixXd Theta;  // N x K

  int N() const { return static_cast<int>(X.rows()); }
};

// Iteration cap for the spectral-norm power iteration. Near-equal top
// singular values slow the Rayleigh-quotient stop rule to ~1e5 iterations
// before its floor engages; the cap must sit above that.
inline constexpr int kDefaultPowerIters = 250000;

struct SolverConfig {
  int max_iters = 2000;
  double eta0 = 0.5;       // step at t=1; decays as eta0/sqrt(t)
  double tol = 1e-7;       // relative best-objective improvement per window
  int stall_window = 50;   // iterations between improvement checks
  int power_iters = kDefaultPowerIters;
  uint64_t seed = 0;
  bool augment_bias = false;  // appends a constant 1 feature; off by default
};

/*! \brief [-B; I_K], the transpose of the reformulation's B-tilde. */
Eigen::MatrixXd BTildePrime(const Eigen::MatrixXd& B);

/*!
 * \brief Induced matrix norm sup ||Mx||_s / ||x||_s.
 *
 * s = one: max column absolute sum. s = inf: max row absolute sum.
 * s = two: largest singular value by power iteration on M'M to relative
 * tolerance 1e-10 (deterministic start from `seed`); throws if the
 * iteration cap is exhausted first.
 */
double InducedNorm(const Eigen::MatrixXd& M, NormOrder s,
                   int power_iters = kDefaultPowerIters, uint64_t seed = 0);

/*!
 * \brief The regularized empirical objective
 * (1/N) sum_i ||theta_i - B'x_i||_r + epsilon * ||[-B; I_K]||_s
 * with s conjugate to r.
 */
double Objective(const Eigen::MatrixXd& B, const TrainingSet& data,
                 double epsilon, NormOrder r,
                 int power_iters = kDefaultPowerIters, uint64_t seed = 0);

/*!
 * \brief A subgradient of Objective at B. Zero residuals contribute
 * nothing; at sigma_max(B) = 0 the spectral regularizer's subgradient is
 * the zero matrix. For r in {one, inf} the sign/argmax selections break
 * ties toward the lowest index.
 */
Eigen::MatrixXd Subgradient(const Eigen::MatrixXd& B, const TrainingSet& data,
                            double epsilon, NormOrder r,
                            int power_iters = kDefaultPowerIters,
                            uint64_t seed = 0);

/*!
 * \brief Subgradient descent with steps eta0/sqrt(t) from B = 0, tracking
 * the best iterate by objective. Stops at max_iters or when the best
 * objective's relative improvement over a stall_window falls below tol.
 * Deterministic given config.seed.
 */
ModelWeights Fit(const TrainingSet& data, double epsilon, NormOrder r,
                 const SolverConfig& config);

/*! \brief Row d of the result is B'x_d for row d of X_test. Throws on a
 * feature-dimension mismatch. */
Eigen::MatrixXd PredictGtd(const ModelWeights& weights,
                           const Eigen::MatrixXd& X_test);

/*! \brief Outcome of sampling distributions inside the Wasserstein ball. */
struct WorstCaseReport {
  double empirical_loss = 0.0;
  double regularized_objective = 0.0;
  double max_sampled_loss = 0.0;
  int n_samples = 0;
  bool bound_holds = false;  // max sampled loss <= objective + 1e-9
};

/*!
 * \brief Samples perturbed empirical distributions whose transport cost
 * stays within the budget epsilon (average r-norm shift of the support
 * points), including gradient-aligned and budget-concentrating variants,
 * and checks that none exceeds the regularized objective.
 */
WorstCaseReport WorstCaseBoundCheck(const ModelWeights& weights,
                                    const TrainingSet& data, double epsilon,
                                    NormOrder r, int n_samples,
                                    uint64_t seed);

/*! \brief Versioned JSON model files; doubles round-trip exactly. */
void SaveModel(const ModelWeights& weights, const std::string& path);
ModelWeights LoadModel(const std::string& path);

}  // namespace drmrr

#endif  // DRMRR_SOLVER_HPP_
