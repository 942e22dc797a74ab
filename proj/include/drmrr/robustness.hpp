#ifndef DRMRR_ROBUSTNESS_HPP_
#define DRMRR_ROBUSTNESS_HPP_

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drmrr/dataset.hpp"

namespace drmrr {

enum class AttackKind { kGaussian, kUniversalFgsm, kBlackboxFgsm, kLabelPoison };

std::string AttackKindName(AttackKind kind);
AttackKind AttackKindFromString(const std::string& name);

/*!
 * \brief Parameters shared by all four perturbation protocols.
 *
 * `eta` is the FGSM step magnitude (kept distinct from the solver's
 * Wasserstein radius epsilon); `e` is the label-retention probability.
 */
struct AttackSpec {
  AttackKind kind = AttackKind::kGaussian;
  double fraction = 0.75;  // fraction of test queries perturbed
  double mu = 0.0;         // Gaussian mean
  double sigma = 0.001;    // Gaussian SD
  double eta = 0.0;        // FGSM magnitude
  double e = 1.0;          // label-retention probability
  uint64_t seed = 0;

  /*! \brief Throws std::invalid_argument when a field leaves its range. */
  void Validate() const;
};

/*!
 * \brief Seed-deterministic choice of ceil(fraction * num_queries) query
 * indices (sorted ascending). The subset depends only on (num_queries,
 * fraction, seed), so every victim model in one experiment sees the same
 * perturbed queries.
 */
std::vector<int> SelectAttackedQueries(int num_queries, double fraction,
                                       uint64_t seed);

/*!
 * \brief Adds i.i.d. N(mu, sigma^2) noise to every feature of every
 * document in the selected queries; everything else (labels, the other
 * queries) is untouched. Per-query seeded substreams keep the output
 * independent of evaluation order.
 */
RankingDataset GaussianAttack(const RankingDataset& test,
                              const AttackSpec& spec);

/*! \brief Pointwise linear adversary fit on clean training data (delegates
 * to FitPointwiseLinear). */
Eigen::VectorXd TrainLinearAdversary(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y);

/*! \brief Gradient of the linear adversary's squared-error cost at (x, y):
 * 2 (w'x - y) w. */
Eigen::VectorXd LinearSquaredErrorGradient(const Eigen::VectorXd& w,
                                           const Eigen::VectorXd& x, double y);

/*!
 * \brief One FGSM step: x + eta * sgn(gradient_fn(x, y)), with sgn(0) = 0,
 * so every component moves by exactly -eta, 0, or +eta.
 */
Eigen::VectorXd FgsmPerturb(
    const Eigen::VectorXd& x, double y,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>&
        gradient_fn,
    double eta);

/*!
 * \brief Universal adversarial perturbation: FGSM with the linear
 * adversary's cost gradient, applied to every document of the selected
 * query subset. Labels stay clean.
 */
RankingDataset UniversalFgsmAttack(const RankingDataset& test,
                                   const Eigen::VectorXd& adversary_w,
                                   const AttackSpec& spec);

/*! \brief Training knobs for the substitute network. */
struct MlpConfig {
  int hidden = 64;          // width of both hidden layers
  int max_epochs = 2000;
  int batch_size = 32;
  double learning_rate = 0.02;
  double tol = 1e-7;        // relative best-MSE improvement per window
  int stall_window = 50;    // epochs between improvement checks
  uint64_t seed = 0;
  std::string activation = "tanh";  // "tanh" or "identity"
};

/*!
 * \brief Attacker-side imitation network: p -> hidden -> hidden -> 1.
 *
 * Identity activation degrades the network to an affine map, which the
 * gradient tests exploit.
 */
struct SubstituteMlp {
  Eigen::MatrixXd W1;  // hidden x p
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;  // hidden x hidden
  Eigen::VectorXd b2;
  Eigen::VectorXd w3;  // hidden
  double b3 = 0.0;
  std::string activation = "tanh";

  double Forward(const Eigen::VectorXd& x) const;
  int InputWidth() const { return static_cast<int>(W1.cols()); }
};

/*!
 * \brief Trains the substitute by mini-batch SGD on squared error against
 * the victim's scalar scores until the training MSE plateaus. Deterministic
 * given config.seed; throws on a non-finite loss (suggesting a smaller
 * learning rate).
 */
SubstituteMlp TrainSubstituteMlp(const Eigen::MatrixXd& X,
                                 const Eigen::VectorXd& victim_scores,
                                 const MlpConfig& config);

/*! \brief Exact backpropagated gradient of (Forward(x) - y)^2 w.r.t. x. */
Eigen::VectorXd MlpInputGradient(const SubstituteMlp& model,
                                 const Eigen::VectorXd& x, double y);

/*!
 * \brief Black-box attack: FGSM through the substitute network's cost
 * gradient, applied to every document of the selected query subset.
 */
RankingDataset BlackboxFgsmAttack(const RankingDataset& test,
                                  const SubstituteMlp& substitute,
                                  const AttackSpec& spec);

/*!
 * \brief Transition probabilities for label poisoning at retention
 * probability e: row y lists P(y -> 0), P(y -> 1), P(y -> 2). Rows sum to
 * 1 for every e in [0,1]; asserted at construction.
 */
std::array<std::array<double, 3>, 3> PoisonTransitionTable(double e);

/*!
 * \brief Independently resamples every training label per its transition
 * row; deterministic given seed. Throws if any label is outside {0,1,2}
 * (the table is 3-grade specific). Test data must never pass through here.
 */
RankingDataset PoisonLabels(const RankingDataset& train, double e,
                            uint64_t seed);

}  // namespace drmrr

#endif  // DRMRR_ROBUSTNESS_HPP_
