#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pplbias {

// Desk-scale linear encoder/decoder world. The decoder W is semi-orthogonal
// with non-negative disjoint-support rows, token distributions d are
// row-stochastic and strictly positive, the document embedding cooperates
// with the decoder (d_emb = d * W^T), and the query embedding is collinear
// (q_emb = lambda * d_emb). Instances built by sample_instance additionally
// share one row sum k across all rows of d_emb * W, which is what makes the
// gradient-overlap identity exact.
struct LabInstance {
    int L = 0;  // sequence length
    int D = 0;  // vocabulary size
    int N = 0;  // embedding dimension
    Eigen::MatrixXd W;      // N x D decoder
    Eigen::MatrixXd d;      // L x D token distributions
    Eigen::MatrixXd d_emb;  // L x N document embedding
    Eigen::MatrixXd q_emb;  // L x N query embedding
    double lambda = 1.0;
};

struct LabRanges {
    int l_lo = 2, l_hi = 8;
    int d_lo = 4, d_hi = 32;
    int n_lo = 2, n_hi = 8;
};

// Which structural condition to break when generating negative controls.
enum class BreakCondition { none, collinearity, orthogonality, cooperation };

// Non-negative W with W * W^T = I_N: the D columns are split into N disjoint
// blocks and each row is a unit vector supported on its block.
Eigen::MatrixXd make_semi_orthogonal_positive(int N, int D, std::uint64_t seed);

// Same block structure with equal entries inside each block (1/sqrt(block)).
Eigen::MatrixXd make_semi_orthogonal_uniform(int N, int D);

// Row-wise linear normalization: each row divided by its sum. Requires every
// entry strictly positive.
Eigen::MatrixXd sigma(const Eigen::MatrixXd& z);

struct MlmLoss {
    double value = 0.0;
    Eigen::VectorXd per_token;
    bool infinite = false;  // some token had zero predicted mass on support
};

// Mean per-token cross-entropy of d against the reconstruction
// sigma(d_emb * W); per-token value l depends on row l alone.
MlmLoss loss_mlm(const LabInstance& inst);
MlmLoss mlm_loss_at(const Eigen::MatrixXd& d, const Eigen::MatrixXd& emb,
                    const Eigen::MatrixXd& W);

// Negative inner product of the mean-pooled document and query embeddings.
double loss_retrieval(const LabInstance& inst);
double retrieval_loss_at(const Eigen::MatrixXd& emb, const Eigen::MatrixXd& q_emb);

struct Grads {
    // True gradient of the masked-language loss in d_emb (what finite
    // differences see).
    Eigen::MatrixXd mlm;
    // Pooled surrogate -(1/L) * 1_{LxL} [sigma(d_emb W) - d] W^T. This is the
    // object the overlap identity relates to the retrieval gradient; it is
    // not the derivative of any scalar loss.
    Eigen::MatrixXd mlm_overlap;
    // Gradient of the retrieval loss in d_emb (q_emb held fixed).
    Eigen::MatrixXd retrieval;
    Eigen::VectorXd k;  // row sums of d_emb * W
    Eigen::MatrixXd K;  // lambda * k_l / (L * (1 - k_l)), constant per row
};

// All analytic gradient objects. Throws assumption_violation if any k_l >= 1.
Grads grads_analytic(const LabInstance& inst);

struct GradCheck {
    Eigen::MatrixXd analytic;
    Eigen::MatrixXd numeric;
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;  // |a - n| / max(1, |a|, |n|)
};

GradCheck check_grad_mlm(const LabInstance& inst, double step = 1e-6);
GradCheck check_grad_retrieval(const LabInstance& inst, double step = 1e-6);

// Draws a condition-satisfying instance: equal row sums k <= 0.95 / sqrt(N),
// strictly positive d with entries >= 0.05 / D, D >= 2N.
LabInstance sample_instance(const LabRanges& ranges, std::mt19937_64& rng);

// Perturbs exactly one condition, leaving the other two intact.
LabInstance break_instance(LabInstance inst, BreakCondition which, std::mt19937_64& rng);

struct IdentityTrial {
    int L = 0, D = 0, N = 0;
    double identity_err = 0.0;
    double fd_err_mlm = 0.0;
    double fd_err_retrieval = 0.0;
    double k_max = 0.0;
    double k_bound = 0.0;  // 1 / sqrt(N)
    bool pass = false;
};

struct IdentityReport {
    long trials = 0;
    double pass_rate = 0.0;
    bool pass_rate_defined = false;  // false when trials == 0
    double max_identity_err = 0.0;
    double max_fd_err = 0.0;
    bool k_bound_ok = true;
    std::vector<IdentityTrial> rows;
};

// Samples `trials` instances (optionally broken) and checks the overlap
// identity, the finite-difference agreement of both true gradients, and the
// k <= 1/sqrt(N) bound. Failures are reported, never thrown.
IdentityReport verify_overlap_identity(long trials, const LabRanges& ranges, std::uint64_t seed,
                                       BreakCondition broken = BreakCondition::none);

struct PerturbationReport {
    bool applicable = false;
    std::string note;
    Eigen::VectorXd delta_mlm_per_token;  // actual per-token loss changes
    double predicted_delta_retrieval = 0.0;
    double actual_delta_retrieval = 0.0;
    bool sign_ok = false;
    double rel_gap = 0.0;  // |pred - actual| / max(1, |pred|, |actual|)
};

// Document-side comparison: d + eps*direction is a twin whose every
// per-token cross-entropy is higher. Contract: its relevance is lower, i.e.
// the retrieval loss rises (both predicted and actual deltas positive).
PerturbationReport verify_doc_perturbation(const LabInstance& inst,
                                           const Eigen::MatrixXd& direction, double eps);

// Model-side comparison: an embedding perturbation that lowers every
// per-token cross-entropy. Contract: the retrieval loss falls.
PerturbationReport verify_emb_perturbation(const LabInstance& inst,
                                           const Eigen::MatrixXd& perturbation, double eps);

// Random zero-row-sum token-space direction that raises every per-token loss
// and lowers the pooled dot product, for verify_doc_perturbation.
Eigen::MatrixXd sample_loss_raising_direction(const LabInstance& inst, std::mt19937_64& rng,
                                              double eps);

// Random embedding perturbation that lowers every per-token loss and raises
// the pooled dot product, for verify_emb_perturbation.
Eigen::MatrixXd sample_loss_lowering_perturbation(const LabInstance& inst, std::mt19937_64& rng,
                                                  double eps);

// Per-row minimizer of the reconstruction loss (entries proportional to
// block mass over block column sum), scaled so that stepping toward it also
// raises the pooled dot product.
Eigen::MatrixXd reconstruction_target(const LabInstance& inst);

}  // namespace pplbias
