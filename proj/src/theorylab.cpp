#include "pplbias/theorylab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pplbias/error.hpp"

namespace pplbias {

namespace {

constexpr double kEntryFloor = 0.05;  // min d entry is kEntryFloor / D

std::vector<int> block_sizes(int N, int D) {
    std::vector<int> sizes(N, D / N);
    for (int n = 0; n < D % N; ++n) ++sizes[n];
    return sizes;
}

void check_decoder_shape(int N, int D) {
    if (N < 1 || D < 1 || N > D)
        throw Error(errc::dimension_error, "decoder needs 1 <= N <= D");
}

Eigen::MatrixXd random_block_decoder(int N, int D, std::mt19937_64& rng) {
    check_decoder_shape(N, D);
    std::uniform_real_distribution<double> entry(0.3, 1.0);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(N, D);
    int col = 0;
    for (int n = 0; n < N; ++n) {
        int m = block_sizes(N, D)[n];
        for (int j = 0; j < m; ++j) w(n, col + j) = entry(rng);
        w.row(n) /= w.row(n).norm();
        col += m;
    }
    return w;
}

// Mean-pooled embedding row, shared by the surrogate gradient and the
// perturbation half-space tests.
Eigen::RowVectorXd pooled(const Eigen::MatrixXd& emb) { return emb.colwise().mean(); }

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& n) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            double denom = std::max({1.0, std::fabs(a(i, j)), std::fabs(n(i, j))});
            worst = std::max(worst, std::fabs(a(i, j) - n(i, j)) / denom);
        }
    return worst;
}

std::mt19937_64 trial_rng(std::uint64_t seed, long trial) {
    // splitmix-style spacing keeps per-trial streams independent and makes
    // trials reproducible in isolation
    return std::mt19937_64(seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(trial + 1));
}

// Per-token cross-entropy of one row; emb_row and d_row only.
double row_mlm(const Eigen::RowVectorXd& d_row, const Eigen::RowVectorXd& emb_row,
               const Eigen::MatrixXd& W, bool* infinite) {
    Eigen::RowVectorXd z = emb_row * W;
    double k = z.sum();
    double tok = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        if (d_row(j) == 0.0) continue;
        double p = z(j) / k;
        if (!(p > 0.0)) {
            if (infinite) *infinite = true;
            return std::numeric_limits<double>::infinity();
        }
        tok -= d_row(j) * std::log(p);
    }
    return tok;
}

}  // namespace

Eigen::MatrixXd make_semi_orthogonal_positive(int N, int D, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random_block_decoder(N, D, rng);
}

Eigen::MatrixXd make_semi_orthogonal_uniform(int N, int D) {
    check_decoder_shape(N, D);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(N, D);
    int col = 0;
    for (int n = 0; n < N; ++n) {
        int m = block_sizes(N, D)[n];
        for (int j = 0; j < m; ++j) w(n, col + j) = 1.0 / std::sqrt(static_cast<double>(m));
        col += m;
    }
    return w;
}

Eigen::MatrixXd sigma(const Eigen::MatrixXd& z) {
    if ((z.array() <= 0.0).any())
        throw Error(errc::domain_error, "normalization input must be strictly positive");
    return z.array().colwise() / z.rowwise().sum().array();
}

MlmLoss mlm_loss_at(const Eigen::MatrixXd& d, const Eigen::MatrixXd& emb,
                    const Eigen::MatrixXd& W) {
    if (d.rows() != emb.rows() || emb.cols() != W.rows() || W.cols() != d.cols())
        throw Error(errc::dimension_error, "token, embedding and decoder shapes disagree");
    MlmLoss out;
    out.per_token.resize(d.rows());
    for (Eigen::Index l = 0; l < d.rows(); ++l)
        out.per_token(l) = row_mlm(d.row(l), emb.row(l), W, &out.infinite);
    out.value = out.per_token.sum() / static_cast<double>(d.rows());
    return out;
}

MlmLoss loss_mlm(const LabInstance& inst) { return mlm_loss_at(inst.d, inst.d_emb, inst.W); }

double retrieval_loss_at(const Eigen::MatrixXd& emb, const Eigen::MatrixXd& q_emb) {
    if (emb.rows() != q_emb.rows() || emb.cols() != q_emb.cols())
        throw Error(errc::dimension_error, "document and query embeddings differ in shape");
    return -pooled(emb).dot(pooled(q_emb));
}

double loss_retrieval(const LabInstance& inst) {
    return retrieval_loss_at(inst.d_emb, inst.q_emb);
}

Grads grads_analytic(const LabInstance& inst) {
    const double L = static_cast<double>(inst.L);
    Eigen::MatrixXd z = inst.d_emb * inst.W;
    if ((z.array() <= 0.0).any())
        throw Error(errc::domain_error, "reconstruction logits must be strictly positive");

    Grads g;
    g.k = z.rowwise().sum();
    if ((g.k.array() >= 1.0).any())
        throw Error(errc::assumption_violation,
                    "a reconstruction row sum reached 1; the overlap factor is undefined");

    // Surrogate: row-pooled residual pushed back through the decoder. Every
    // row of the result is the same column sum.
    Eigen::MatrixXd residual = (sigma(z) - inst.d) * inst.W.transpose();
    g.mlm_overlap = (-1.0 / L) * residual.colwise().sum().replicate(inst.L, 1);

    // True derivative of the mean cross-entropy in d_emb, valid for any
    // decoder, not just block ones.
    Eigen::MatrixXd ratio = inst.d.cwiseQuotient(z) * inst.W.transpose();
    Eigen::VectorXd row_mass = inst.d.rowwise().sum();
    Eigen::RowVectorXd col_mass = inst.W.rowwise().sum().transpose();
    Eigen::MatrixXd pull = row_mass.cwiseQuotient(g.k) * col_mass;
    g.mlm = (-1.0 / L) * (ratio - pull);

    g.retrieval = (-1.0 / (L * L)) * inst.q_emb.colwise().sum().replicate(inst.L, 1);

    Eigen::VectorXd factor =
        inst.lambda * g.k.array() / (L * (1.0 - g.k.array()));
    g.K = factor.replicate(1, inst.N);
    return g;
}

namespace {

template <typename Loss>
GradCheck central_difference(const Eigen::MatrixXd& analytic, Eigen::MatrixXd emb, double step,
                             Loss&& loss) {
    GradCheck check;
    check.analytic = analytic;
    check.numeric.resizeLike(analytic);
    for (Eigen::Index i = 0; i < emb.rows(); ++i)
        for (Eigen::Index j = 0; j < emb.cols(); ++j) {
            double keep = emb(i, j);
            emb(i, j) = keep + step;
            double hi = loss(emb);
            emb(i, j) = keep - step;
            double lo = loss(emb);
            emb(i, j) = keep;
            check.numeric(i, j) = (hi - lo) / (2.0 * step);
        }
    check.max_abs_err = (check.analytic - check.numeric).cwiseAbs().maxCoeff();
    check.max_rel_err = max_rel(check.analytic, check.numeric);
    return check;
}

}  // namespace

GradCheck check_grad_mlm(const LabInstance& inst, double step) {
    Grads g = grads_analytic(inst);
    return central_difference(g.mlm, inst.d_emb, step, [&](const Eigen::MatrixXd& emb) {
        return mlm_loss_at(inst.d, emb, inst.W).value;
    });
}

GradCheck check_grad_retrieval(const LabInstance& inst, double step) {
    Grads g = grads_analytic(inst);
    return central_difference(g.retrieval, inst.d_emb, step, [&](const Eigen::MatrixXd& emb) {
        return retrieval_loss_at(emb, inst.q_emb);
    });
}

LabInstance sample_instance(const LabRanges& ranges, std::mt19937_64& rng) {
    if (ranges.l_lo < 1 || ranges.l_lo > ranges.l_hi || ranges.n_lo < 2 ||
        ranges.n_lo > ranges.n_hi || ranges.d_lo > ranges.d_hi)
        throw Error(errc::invalid_argument, "malformed dimension ranges");
    if (ranges.d_hi < 2 * ranges.n_lo)
        throw Error(errc::invalid_argument,
                    "dimension ranges leave no room for D >= 2N");

    LabInstance inst;
    inst.L = std::uniform_int_distribution<int>(ranges.l_lo, ranges.l_hi)(rng);
    int n_hi = std::min(ranges.n_hi, ranges.d_hi / 2);
    inst.N = std::uniform_int_distribution<int>(ranges.n_lo, n_hi)(rng);
    inst.D = std::uniform_int_distribution<int>(std::max(ranges.d_lo, 2 * inst.N),
                                                ranges.d_hi)(rng);
    inst.W = random_block_decoder(inst.N, inst.D, rng);

    // Column weights u_j: one unit of token mass on column j contributes u_j
    // to the reconstruction row sum k. Equal k across rows is what makes the
    // overlap identity exact, so every row is steered to the same target.
    std::vector<int> owner(inst.D);
    {
        int col = 0, n = 0;
        for (int m : block_sizes(inst.N, inst.D)) {
            for (int j = 0; j < m; ++j) owner[col + j] = n;
            ++n;
            col += m;
        }
    }
    auto column_weights = [&] {
        Eigen::VectorXd u(inst.D);
        for (int j = 0; j < inst.D; ++j)
            u(j) = inst.W(owner[j], j) * inst.W.row(owner[j]).sum();
        return u;
    };

    const double eta = kEntryFloor;
    const double k_cap = 0.95 / std::sqrt(static_cast<double>(inst.N));
    Eigen::VectorXd u = column_weights();
    double v_lo = 0.0, v_hi = 0.0;
    bool feasible = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
        double u_min = u.minCoeff(), u_max = u.maxCoeff(), u_bar = u.mean();
        v_lo = (1.0 - eta) * u_min + eta * u_bar;
        v_hi = (1.0 - eta) * u_max + eta * u_bar;
        if (std::min(v_hi, k_cap) - v_lo > 0.01 * k_cap) {
            feasible = true;
            break;
        }
        // Carve one small decoder entry so a low-k token distribution exists.
        int j_min = 0;
        u.minCoeff(&j_min);
        inst.W(owner[j_min], j_min) *= 0.25;
        inst.W.row(owner[j_min]) /= inst.W.row(owner[j_min]).norm();
        u = column_weights();
    }
    if (!feasible)
        throw Error(errc::domain_error, "could not condition the decoder for a shared row sum");

    double reach = std::min(v_hi, k_cap) - v_lo;
    double k_star = std::uniform_real_distribution<double>(v_lo + 0.1 * reach,
                                                           v_lo + 0.9 * reach)(rng);

    int j_min = 0, j_max = 0;
    u.minCoeff(&j_min);
    u.maxCoeff(&j_max);
    Eigen::VectorXd uniform = Eigen::VectorXd::Constant(inst.D, 1.0 / inst.D);
    Eigen::VectorXd p_lo = eta * uniform;
    p_lo(j_min) += 1.0 - eta;
    Eigen::VectorXd p_hi = eta * uniform;
    p_hi(j_max) += 1.0 - eta;

    std::exponential_distribution<double> expo(1.0);
    inst.d.resize(inst.L, inst.D);
    for (int l = 0; l < inst.L; ++l) {
        Eigen::VectorXd p_rand(inst.D);
        for (int j = 0; j < inst.D; ++j) p_rand(j) = expo(rng);
        p_rand /= p_rand.sum();
        p_rand = 0.3 * uniform + 0.7 * p_rand;

        double v_rand = p_rand.dot(u);
        const Eigen::VectorXd& anchor = v_rand > k_star ? p_lo : p_hi;
        double v_anchor = anchor.dot(u);
        double theta = v_anchor == v_rand ? 0.0 : (v_rand - k_star) / (v_rand - v_anchor);
        theta = std::clamp(theta, 0.0, 1.0);
        inst.d.row(l) = ((1.0 - theta) * p_rand + theta * anchor).transpose();
    }

    inst.d_emb = inst.d * inst.W.transpose();
    inst.lambda = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    inst.q_emb = inst.lambda * inst.d_emb;
    return inst;
}

LabInstance break_instance(LabInstance inst, BreakCondition which, std::mt19937_64& rng) {
    switch (which) {
        case BreakCondition::none:
            return inst;
        case BreakCondition::collinearity:
            // One query row gains mass, so the pooled query is no longer a
            // multiple of the pooled document embedding.
            inst.q_emb = inst.lambda * inst.d_emb;
            inst.q_emb.row(0) *= 4.0;
            return inst;
        case BreakCondition::orthogonality: {
            // Contaminate each decoder row with one out-of-block column, then
            // rebuild the dependent quantities so only orthogonality breaks.
            std::uniform_real_distribution<double> bump(0.25, 0.4);
            for (int n = 0; n < inst.N; ++n) {
                std::uniform_int_distribution<int> pick(0, inst.D - 1);
                int j = pick(rng);
                while (inst.W(n, j) != 0.0) j = (j + 1) % inst.D;
                inst.W(n, j) = bump(rng);
                inst.W.row(n) /= inst.W.row(n).norm();
            }
            inst.d_emb = inst.d * inst.W.transpose();
            inst.q_emb = inst.lambda * inst.d_emb;
            return inst;
        }
        case BreakCondition::cooperation: {
            // Jitter the embedding away from d * W^T, keeping it positive and
            // keeping the query collinear with the new embedding.
            std::uniform_real_distribution<double> mag(0.2, 0.4);
            std::bernoulli_distribution up(0.5);
            for (int l = 0; l < inst.L; ++l)
                for (int n = 0; n < inst.N; ++n)
                    inst.d_emb(l, n) *= up(rng) ? 1.0 + mag(rng) : 1.0 - mag(rng);
            inst.q_emb = inst.lambda * inst.d_emb;
            return inst;
        }
    }
    throw Error(errc::invalid_argument, "unknown break condition");
}

IdentityReport verify_overlap_identity(long trials, const LabRanges& ranges, std::uint64_t seed,
                                       BreakCondition broken) {
    if (trials < 0) throw Error(errc::invalid_argument, "trials must be non-negative");
    IdentityReport report;
    report.trials = trials;
    report.pass_rate_defined = trials > 0;

    long passes = 0;
    for (long t = 0; t < trials; ++t) {
        std::mt19937_64 rng = trial_rng(seed, t);
        LabInstance inst = sample_instance(ranges, rng);
        if (broken != BreakCondition::none) inst = break_instance(inst, broken, rng);

        IdentityTrial row;
        row.L = inst.L;
        row.D = inst.D;
        row.N = inst.N;
        row.k_bound = 1.0 / std::sqrt(static_cast<double>(inst.N));
        row.k_max = (inst.d_emb * inst.W).rowwise().sum().maxCoeff();
        bool bound_ok = row.k_max <= row.k_bound + 1e-12;

        try {
            Grads g = grads_analytic(inst);
            row.identity_err =
                (g.retrieval - g.K.cwiseProduct(g.mlm_overlap)).cwiseAbs().maxCoeff();
        } catch (const Error&) {
            row.identity_err = std::numeric_limits<double>::infinity();
        }
        try {
            row.fd_err_mlm = check_grad_mlm(inst).max_rel_err;
            row.fd_err_retrieval = check_grad_retrieval(inst).max_rel_err;
        } catch (const Error&) {
            row.fd_err_mlm = row.fd_err_retrieval = std::numeric_limits<double>::infinity();
        }

        row.pass = row.identity_err < 1e-8 && row.fd_err_mlm < 1e-5 &&
                   row.fd_err_retrieval < 1e-5 && bound_ok;
        if (row.pass) ++passes;
        report.k_bound_ok = report.k_bound_ok && bound_ok;
        report.max_identity_err = std::max(report.max_identity_err, row.identity_err);
        report.max_fd_err =
            std::max({report.max_fd_err, row.fd_err_mlm, row.fd_err_retrieval});
        report.rows.push_back(row);
    }
    report.pass_rate = trials > 0 ? static_cast<double>(passes) / trials : 0.0;
    return report;
}

namespace {

// Sum over entries of K .* overlap .* delta: the first-order retrieval change
// the overlap identity predicts for an embedding move.
double predicted_shift(const LabInstance& inst, const Eigen::MatrixXd& delta_emb) {
    Grads g = grads_analytic(inst);
    return g.K.cwiseProduct(g.mlm_overlap).cwiseProduct(delta_emb).sum();
}

}  // namespace

PerturbationReport verify_doc_perturbation(const LabInstance& inst,
                                           const Eigen::MatrixXd& direction, double eps) {
    if (direction.rows() != inst.d.rows() || direction.cols() != inst.d.cols())
        throw Error(errc::dimension_error, "direction shape does not match the token matrix");
    if (!(eps > 0.0)) throw Error(errc::invalid_argument, "eps must be positive");

    PerturbationReport rep;
    Eigen::MatrixXd d1 = inst.d + eps * direction;
    if ((d1.array() <= 0.0).any()) {
        rep.note = "perturbed token distribution leaves the positive simplex";
        rep.delta_mlm_per_token = Eigen::VectorXd::Zero(inst.L);
        return rep;
    }
    // Conserve each row's token mass. For a mass-neutral direction the ratio
    // is exactly one and the row is untouched bitwise.
    for (Eigen::Index l = 0; l < d1.rows(); ++l)
        d1.row(l) *= inst.d.row(l).sum() / d1.row(l).sum();

    Eigen::MatrixXd emb1 = d1 * inst.W.transpose();
    MlmLoss before = mlm_loss_at(inst.d, inst.d_emb, inst.W);
    MlmLoss after = mlm_loss_at(d1, emb1, inst.W);
    rep.delta_mlm_per_token = after.per_token - before.per_token;

    rep.actual_delta_retrieval =
        retrieval_loss_at(emb1, inst.q_emb) - retrieval_loss_at(inst.d_emb, inst.q_emb);
    rep.predicted_delta_retrieval = predicted_shift(inst, emb1 - inst.d_emb);
    rep.rel_gap = std::fabs(rep.predicted_delta_retrieval - rep.actual_delta_retrieval) /
                  std::max({1.0, std::fabs(rep.predicted_delta_retrieval),
                            std::fabs(rep.actual_delta_retrieval)});
    // Higher perplexity must cost relevance: the retrieval loss rises.
    rep.sign_ok = rep.predicted_delta_retrieval > 0.0 && rep.actual_delta_retrieval > 0.0;

    if (rep.delta_mlm_per_token.minCoeff() <= 0.0) {
        rep.note = "at least one token's cross-entropy did not rise";
        return rep;
    }
    rep.applicable = true;
    return rep;
}

PerturbationReport verify_emb_perturbation(const LabInstance& inst,
                                           const Eigen::MatrixXd& perturbation, double eps) {
    if (perturbation.rows() != inst.d_emb.rows() || perturbation.cols() != inst.d_emb.cols())
        throw Error(errc::dimension_error, "perturbation shape does not match the embedding");
    if (!(eps > 0.0)) throw Error(errc::invalid_argument, "eps must be positive");

    PerturbationReport rep;
    Eigen::MatrixXd emb1 = inst.d_emb + eps * perturbation;
    if ((emb1.array() <= 0.0).any()) {
        rep.note = "perturbed embedding loses positivity";
        rep.delta_mlm_per_token = Eigen::VectorXd::Zero(inst.L);
        return rep;
    }

    MlmLoss before = mlm_loss_at(inst.d, inst.d_emb, inst.W);
    MlmLoss after = mlm_loss_at(inst.d, emb1, inst.W);
    rep.delta_mlm_per_token = after.per_token - before.per_token;

    rep.actual_delta_retrieval =
        retrieval_loss_at(emb1, inst.q_emb) - retrieval_loss_at(inst.d_emb, inst.q_emb);
    rep.predicted_delta_retrieval = predicted_shift(inst, emb1 - inst.d_emb);
    rep.rel_gap = std::fabs(rep.predicted_delta_retrieval - rep.actual_delta_retrieval) /
                  std::max({1.0, std::fabs(rep.predicted_delta_retrieval),
                            std::fabs(rep.actual_delta_retrieval)});
    // Better language modeling must help relevance: the retrieval loss falls.
    rep.sign_ok = rep.predicted_delta_retrieval < 0.0 && rep.actual_delta_retrieval < 0.0;

    if (rep.delta_mlm_per_token.maxCoeff() >= 0.0) {
        rep.note = "at least one token's cross-entropy did not fall";
        return rep;
    }
    rep.applicable = true;
    return rep;
}

Eigen::MatrixXd sample_loss_raising_direction(const LabInstance& inst, std::mt19937_64& rng,
                                              double eps) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::RowVectorXd mean_emb = pooled(inst.d_emb);
    Eigen::MatrixXd direction(inst.L, inst.D);

    for (int l = 0; l < inst.L; ++l) {
        bool found = false;
        for (int attempt = 0; attempt < 10000 && !found; ++attempt) {
            Eigen::RowVectorXd xi(inst.D);
            for (int j = 0; j < inst.D; ++j) xi(j) = gauss(rng);
            xi.array() -= xi.mean();  // keep row sums at one
            xi /= xi.cwiseAbs().maxCoeff();

            for (double flip : {1.0, -1.0}) {
                Eigen::RowVectorXd cand = flip * xi;
                Eigen::RowVectorXd d1 = inst.d.row(l) + eps * cand;
                if ((d1.array() <= 0.0).any()) continue;
                double before = row_mlm(inst.d.row(l), inst.d_emb.row(l), inst.W, nullptr);
                double after =
                    row_mlm(d1 / d1.sum(), (d1 / d1.sum()) * inst.W.transpose(), inst.W, nullptr);
                bool raises = after > before;
                bool lowers_pool = mean_emb.dot(cand * inst.W.transpose()) < 0.0;
                if (raises && lowers_pool) {
                    direction.row(l) = cand;
                    found = true;
                    break;
                }
            }
        }
        if (!found)
            throw Error(errc::domain_error,
                        "no loss-raising direction found; instance is degenerate");
    }
    return direction;
}

Eigen::MatrixXd sample_loss_lowering_perturbation(const LabInstance& inst, std::mt19937_64& rng,
                                                  double eps) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::RowVectorXd mean_emb = pooled(inst.d_emb);
    Eigen::MatrixXd perturbation(inst.L, inst.N);

    for (int l = 0; l < inst.L; ++l) {
        bool found = false;
        for (int attempt = 0; attempt < 10000 && !found; ++attempt) {
            Eigen::RowVectorXd xi(inst.N);
            for (int n = 0; n < inst.N; ++n) xi(n) = gauss(rng);
            xi /= xi.cwiseAbs().maxCoeff();

            for (double flip : {1.0, -1.0}) {
                Eigen::RowVectorXd cand = flip * xi;
                Eigen::RowVectorXd emb1 = inst.d_emb.row(l) + eps * cand;
                if ((emb1.array() <= 0.0).any()) continue;
                double before = row_mlm(inst.d.row(l), inst.d_emb.row(l), inst.W, nullptr);
                double after = row_mlm(inst.d.row(l), emb1, inst.W, nullptr);
                bool lowers = after < before;
                bool raises_pool = mean_emb.dot(cand) > 0.0;
                if (lowers && raises_pool) {
                    perturbation.row(l) = cand;
                    found = true;
                    break;
                }
            }
        }
        if (!found)
            throw Error(errc::domain_error,
                        "no loss-lowering perturbation found; instance is degenerate");
    }
    return perturbation;
}

Eigen::MatrixXd reconstruction_target(const LabInstance& inst) {
    // Per-row loss minimizer: block mass over block column sum. The loss is
    // scale-invariant per row, so each row is rescaled to sit on the far side
    // of the pooled-dot-product half-space.
    Eigen::RowVectorXd mean_emb = pooled(inst.d_emb);
    Eigen::MatrixXd target(inst.L, inst.N);
    for (int l = 0; l < inst.L; ++l) {
        for (int n = 0; n < inst.N; ++n) {
            double mass = 0.0;
            for (int j = 0; j < inst.D; ++j)
                if (inst.W(n, j) != 0.0) mass += inst.d(l, j);
            target(l, n) = mass / inst.W.row(n).sum();
        }
        double scale = 2.0 * mean_emb.dot(inst.d_emb.row(l)) / mean_emb.dot(target.row(l));
        target.row(l) *= scale;
    }
    return target;
}

}  // namespace pplbias
