#include "mtebounds/regress.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mtebounds {

namespace {

constexpr int kDummyPathGroupLimit = 1000;

double binom(int n, int k) {
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v *= static_cast<double>(n - k + i) / i;
    return v;
}

std::vector<double> select_response(const ObservationTable& table, ResponseColumn response) {
    std::vector<double> out(table.size());
    switch (response) {
        case ResponseColumn::y:
            return table.y;
        case ResponseColumn::t:
            for (std::size_t i = 0; i < table.size(); ++i) out[i] = table.t[i];
            return out;
        case ResponseColumn::d:
            if (!table.has_d()) throw ConfigError("response column d is not present");
            for (std::size_t i = 0; i < table.size(); ++i) out[i] = (*table.d)[i];
            return out;
    }
    throw ConfigError("unknown response column");
}

// Column layout in the centered basis:
//   [0, G)                           group intercepts
//   G + (j-1)*G + g                  interacted (z-mu)^j for group g, j = 1..J_int
//   G + J_int*G + (j-J_int-1)        common (z-mu)^j,          j = J_int+1..J_max
struct Layout {
    int groups;
    int j_int;
    int j_max;
    int params() const { return groups + groups * j_int + (j_max - j_int); }
    int slopes() const { return params() - groups; }
    int interacted_index(int g, int j) const { return groups + (j - 1) * groups + g; }
    int common_index(int j) const { return groups + j_int * groups + (j - j_int - 1); }

    std::string column_name(const std::vector<std::string>& labels, int idx) const {
        if (idx < groups) return "intercept:" + labels[static_cast<std::size_t>(idx)];
        idx -= groups;
        if (idx < groups * j_int) {
            const int j = idx / groups + 1;
            const int g = idx % groups;
            return "z^" + std::to_string(j) + ":" + labels[static_cast<std::size_t>(g)];
        }
        idx -= groups * j_int;
        return "z^" + std::to_string(j_int + 1 + idx);
    }
};

// Raw-basis coefficients r = T * centered-basis coefficients b, where T
// expands each (z-mu)^j into powers of z. Same column layout on both sides;
// common centered terms spill x-independent mass into every group's
// low-degree raw coefficients.
Eigen::MatrixXd basis_shift(const Layout& lay, double mu) {
    const int p = lay.params();
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(p, p);
    auto shift = [&](int j, int k) { return binom(j, k) * std::pow(-mu, j - k); };
    for (int g = 0; g < lay.groups; ++g) {
        T(g, g) = 1.0;
        for (int j = 1; j <= lay.j_int; ++j) T(g, lay.interacted_index(g, j)) = shift(j, 0);
        for (int j = lay.j_int + 1; j <= lay.j_max; ++j) T(g, lay.common_index(j)) = shift(j, 0);
        for (int k = 1; k <= lay.j_int; ++k) {
            const int row = lay.interacted_index(g, k);
            for (int j = k; j <= lay.j_int; ++j) T(row, lay.interacted_index(g, j)) = shift(j, k);
            for (int j = lay.j_int + 1; j <= lay.j_max; ++j)
                T(row, lay.common_index(j)) = shift(j, k);
        }
    }
    for (int k = lay.j_int + 1; k <= lay.j_max; ++k) {
        const int row = lay.common_index(k);
        for (int j = k; j <= lay.j_max; ++j) T(row, lay.common_index(j)) = shift(j, k);
    }
    return T;
}

struct CenteredSolution {
    Eigen::VectorXd beta;        // centered basis
    Eigen::VectorXd residuals;
    Eigen::MatrixXd covariance;  // HC3, centered basis
    double f_statistic;
    int f_restrictions;
};

double robust_wald_f(const Eigen::VectorXd& beta, const Eigen::MatrixXd& cov, int first_slope) {
    const int q = static_cast<int>(beta.size()) - first_slope;
    if (q <= 0) return 0.0;
    const Eigen::VectorXd b = beta.tail(q);
    const Eigen::MatrixXd v = cov.bottomRightCorner(q, q);
    const Eigen::VectorXd solved = v.ldlt().solve(b);
    return b.dot(solved) / q;
}

CenteredSolution solve_dummies(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const Layout& lay, const std::vector<std::string>& labels) {
    const auto n = X.rows();
    const auto p = X.cols();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        const int offending = qr.colsPermutation().indices()(qr.rank());
        throw NumericError("singular design: column '" +
                           lay.column_name(labels, offending) + "' is collinear");
    }
    CenteredSolution sol;
    sol.beta = qr.solve(y);
    sol.residuals = y - X * sol.beta;

    // thin Q of the pivoted factorization: hat diagonal and the HC3 sandwich
    Eigen::MatrixXd Q1 = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    Eigen::VectorXd omega(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = Q1.row(i).squaredNorm();
        const double denom = 1.0 - h;
        omega(i) = denom <= 1e-12 ? 0.0 : sol.residuals(i) * sol.residuals(i) / (denom * denom);
    }
    const Eigen::MatrixXd meat = Q1.transpose() * omega.asDiagonal() * Q1;
    const Eigen::MatrixXd rinv =
        qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>().solve(
            Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd bread = qr.colsPermutation() * rinv;
    sol.covariance = bread * meat * bread.transpose();
    sol.f_restrictions = static_cast<int>(p) - lay.groups;
    sol.f_statistic = robust_wald_f(sol.beta, sol.covariance, lay.groups);
    return sol;
}

CenteredSolution solve_within(const ObservationTable& table, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& zc, const Layout& lay,
                              const std::vector<std::string>& labels) {
    const auto n = static_cast<Eigen::Index>(table.size());
    const int G = lay.groups;
    const int q = lay.slopes();

    std::vector<Eigen::Index> group_size(static_cast<std::size_t>(G), 0);
    for (Eigen::Index i = 0; i < n; ++i) ++group_size[static_cast<std::size_t>(table.x[i])];

    if (q == 0) {
        // means-only model
        CenteredSolution sol;
        sol.beta = Eigen::VectorXd::Zero(G);
        Eigen::VectorXd sums = Eigen::VectorXd::Zero(G);
        for (Eigen::Index i = 0; i < n; ++i) sums(table.x[i]) += y(i);
        for (int g = 0; g < G; ++g)
            sol.beta(g) = sums(g) / static_cast<double>(group_size[static_cast<std::size_t>(g)]);
        sol.residuals.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) sol.residuals(i) = y(i) - sol.beta(table.x[i]);
        sol.covariance = Eigen::MatrixXd::Zero(G, G);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto g = static_cast<std::size_t>(table.x[i]);
            const double ng = static_cast<double>(group_size[g]);
            const double denom = 1.0 - 1.0 / ng;
            const double w = denom <= 1e-12
                                 ? 0.0
                                 : sol.residuals(i) * sol.residuals(i) / (denom * denom);
            sol.covariance(table.x[i], table.x[i]) += w / (ng * ng);
        }
        sol.f_statistic = 0.0;
        sol.f_restrictions = 0;
        return sol;
    }

    // slope columns in the centered basis, then demeaned within groups
    Eigen::MatrixXd W(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int g = table.x[i];
        double pw = 1.0;
        for (int j = 1; j <= lay.j_max; ++j) {
            pw *= zc(i);
            if (j <= lay.j_int) {
                for (int gg = 0; gg < G; ++gg)
                    W(i, lay.interacted_index(gg, j) - G) = gg == g ? pw : 0.0;
            } else {
                W(i, lay.common_index(j) - G) = pw;
            }
        }
    }
    Eigen::MatrixXd col_group_mean = Eigen::MatrixXd::Zero(G, q);
    Eigen::VectorXd y_group_mean = Eigen::VectorXd::Zero(G);
    for (Eigen::Index i = 0; i < n; ++i) {
        col_group_mean.row(table.x[i]) += W.row(i);
        y_group_mean(table.x[i]) += y(i);
    }
    for (int g = 0; g < G; ++g) {
        col_group_mean.row(g) /= static_cast<double>(group_size[static_cast<std::size_t>(g)]);
        y_group_mean(g) /= static_cast<double>(group_size[static_cast<std::size_t>(g)]);
    }
    Eigen::MatrixXd Wt(n, q);
    Eigen::VectorXd yt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Wt.row(i) = W.row(i) - col_group_mean.row(table.x[i]);
        yt(i) = y(i) - y_group_mean(table.x[i]);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Wt);
    qr.setThreshold(1e-10);
    if (qr.rank() < q) {
        const int offending = G + qr.colsPermutation().indices()(qr.rank());
        throw NumericError("singular design: column '" +
                           lay.column_name(labels, offending) + "' is collinear");
    }
    const Eigen::VectorXd slopes = qr.solve(yt);
    const Eigen::VectorXd e = yt - Wt * slopes;

    CenteredSolution sol;
    sol.beta.resize(G + q);
    for (int g = 0; g < G; ++g)
        sol.beta(g) = y_group_mean(g) - col_group_mean.row(g).dot(slopes);
    sol.beta.tail(q) = slopes;
    sol.residuals = e;

    Eigen::MatrixXd Q1 = qr.householderQ() * Eigen::MatrixXd::Identity(n, q);
    Eigen::VectorXd omega(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h =
            1.0 / static_cast<double>(group_size[static_cast<std::size_t>(table.x[i])]) +
            Q1.row(i).squaredNorm();
        const double denom = 1.0 - h;
        omega(i) = denom <= 1e-12 ? 0.0 : e(i) * e(i) / (denom * denom);
    }

    const Eigen::MatrixXd rinv =
        qr.matrixR().topLeftCorner(q, q).template triangularView<Eigen::Upper>().solve(
            Eigen::MatrixXd::Identity(q, q));
    const Eigen::MatrixXd gram_inv =
        qr.colsPermutation() * rinv * rinv.transpose() * qr.colsPermutation().transpose();
    const Eigen::MatrixXd meat = Wt.transpose() * omega.asDiagonal() * Wt;
    const Eigen::MatrixXd v_ss = gram_inv * meat * gram_inv;

    // Intercept variances and intercept-slope covariances follow from the
    // intercept's representation as a linear functional of y:
    //   ic_g = mean_g(y) - wbar_g' (Wt'Wt)^{-1} Wt' y
    sol.covariance = Eigen::MatrixXd::Zero(G + q, G + q);
    sol.covariance.bottomRightCorner(q, q) = v_ss;
    for (int g = 0; g < G; ++g) {
        const Eigen::VectorXd qg = gram_inv * col_group_mean.row(g).transpose();
        const Eigen::VectorXd s = Wt * qg;
        const double ng = static_cast<double>(group_size[static_cast<std::size_t>(g)]);
        double own = 0.0, cross = 0.0;
        Eigen::RowVectorXd in_group_meat = Eigen::RowVectorXd::Zero(q);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (table.x[i] == g) {
                own += omega(i);
                cross += omega(i) * s(i);
                in_group_meat += omega(i) * Wt.row(i);
            }
        }
        const double quad = qg.dot(meat * qg);
        sol.covariance(g, g) = own / (ng * ng) - 2.0 * cross / ng + quad;
        const Eigen::RowVectorXd cov_gs = (in_group_meat / ng - qg.transpose() * meat) * gram_inv;
        sol.covariance.block(g, G, 1, q) = cov_gs;
        sol.covariance.block(G, g, q, 1) = cov_gs.transpose();
    }
    sol.f_restrictions = q;
    sol.f_statistic = robust_wald_f(sol.beta, sol.covariance, G);
    return sol;
}

}  // namespace

double FePolyFit::value(double z, int g) const {
    double v = intercepts[static_cast<std::size_t>(g)];
    double pw = 1.0;
    for (int j = 1; j <= degree_interacted; ++j) {
        pw *= z;
        v += interacted[static_cast<std::size_t>(g)][static_cast<std::size_t>(j - 1)] * pw;
    }
    for (int j = degree_interacted + 1; j <= degree_max; ++j) {
        pw *= z;
        v += common[static_cast<std::size_t>(j - degree_interacted - 1)] * pw;
    }
    return v;
}

double FePolyFit::derivative(double z, int g) const {
    double v = 0.0;
    double pw = 1.0;
    for (int j = 1; j <= degree_interacted; ++j) {
        v += j * interacted[static_cast<std::size_t>(g)][static_cast<std::size_t>(j - 1)] * pw;
        pw *= z;
    }
    for (int j = degree_interacted + 1; j <= degree_max; ++j) {
        v += j * common[static_cast<std::size_t>(j - degree_interacted - 1)] * pw;
        pw *= z;
    }
    return v;
}

double FePolyFit::derivative_pooled(double z) const {
    double v = 0.0;
    for (std::size_t g = 0; g < intercepts.size(); ++g)
        v += group_shares[g] * derivative(z, static_cast<int>(g));
    return v;
}

FePolyFit fit_fe_poly(const ObservationTable& table, ResponseColumn response, int degree_max,
                      int degree_interacted, FePath path) {
    if (degree_max < 0 || degree_interacted < 0)
        throw ParamError("polynomial degrees must be nonnegative");
    if (degree_interacted > degree_max)
        throw ParamError("interacted degree cannot exceed the maximum degree");

    const std::vector<double> resp = select_response(table, response);
    const auto n = static_cast<Eigen::Index>(table.size());
    const Layout lay{table.group_count(), degree_interacted, degree_max};
    if (n <= lay.params())
        throw NumericError("design has " + std::to_string(lay.params()) +
                           " parameters but only " + std::to_string(n) + " observations");

    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(resp.data(), n);
    Eigen::VectorXd zc(n);
    const double mu =
        std::accumulate(table.z.begin(), table.z.end(), 0.0) / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) zc(i) = table.z[i] - mu;

    const bool use_dummies = path == FePath::dummies ||
                             (path == FePath::automatic && lay.groups <= kDummyPathGroupLimit);
    CenteredSolution sol;
    if (use_dummies) {
        Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, lay.params());
        for (Eigen::Index i = 0; i < n; ++i) {
            const int g = table.x[i];
            X(i, g) = 1.0;
            double pw = 1.0;
            for (int j = 1; j <= degree_interacted; ++j) {
                pw *= zc(i);
                X(i, lay.interacted_index(g, j)) = pw;
            }
            for (int j = degree_interacted + 1; j <= degree_max; ++j) {
                pw *= zc(i);
                X(i, lay.common_index(j)) = pw;
            }
        }
        sol = solve_dummies(X, y, lay, table.group_labels);
    } else {
        sol = solve_within(table, y, zc, lay, table.group_labels);
    }

    const Eigen::MatrixXd T = basis_shift(lay, mu);
    const Eigen::VectorXd raw = T * sol.beta;
    const Eigen::MatrixXd v_raw = T * sol.covariance * T.transpose();

    FePolyFit fit;
    fit.degree_max = degree_max;
    fit.degree_interacted = degree_interacted;
    fit.group_labels = table.group_labels;
    fit.group_shares.assign(static_cast<std::size_t>(lay.groups), 0.0);
    for (Eigen::Index i = 0; i < n; ++i)
        fit.group_shares[static_cast<std::size_t>(table.x[i])] += 1.0 / static_cast<double>(n);
    fit.z_mean = mu;
    fit.z_min = *std::min_element(table.z.begin(), table.z.end());
    fit.z_max = *std::max_element(table.z.begin(), table.z.end());

    fit.intercepts.resize(static_cast<std::size_t>(lay.groups));
    fit.intercept_se.resize(static_cast<std::size_t>(lay.groups));
    fit.interacted.assign(static_cast<std::size_t>(lay.groups),
                          std::vector<double>(static_cast<std::size_t>(degree_interacted)));
    fit.interacted_se = fit.interacted;
    for (int g = 0; g < lay.groups; ++g) {
        fit.intercepts[static_cast<std::size_t>(g)] = raw(g);
        fit.intercept_se[static_cast<std::size_t>(g)] = std::sqrt(std::max(0.0, v_raw(g, g)));
        for (int j = 1; j <= degree_interacted; ++j) {
            const int idx = lay.interacted_index(g, j);
            fit.interacted[static_cast<std::size_t>(g)][static_cast<std::size_t>(j - 1)] = raw(idx);
            fit.interacted_se[static_cast<std::size_t>(g)][static_cast<std::size_t>(j - 1)] =
                std::sqrt(std::max(0.0, v_raw(idx, idx)));
        }
    }
    for (int j = degree_interacted + 1; j <= degree_max; ++j) {
        const int idx = lay.common_index(j);
        fit.common.push_back(raw(idx));
        fit.common_se.push_back(std::sqrt(std::max(0.0, v_raw(idx, idx))));
    }
    fit.residuals.assign(sol.residuals.data(), sol.residuals.data() + n);
    fit.f_statistic = sol.f_statistic;
    fit.f_restrictions = sol.f_restrictions;
    return fit;
}

NaiveIvResult naive_iv(const ObservationTable& table, TreatmentArm treatment) {
    const std::vector<std::uint8_t>* treat = &table.t;
    if (treatment == TreatmentArm::true_treatment) {
        if (!table.has_d()) throw ConfigError("naive_iv on d requires a d column");
        treat = &*table.d;
    }
    const auto n = table.size();
    const int G = table.group_count();
    std::vector<double> z_mean(static_cast<std::size_t>(G), 0.0);
    std::vector<double> y_mean(static_cast<std::size_t>(G), 0.0);
    std::vector<double> w_mean(static_cast<std::size_t>(G), 0.0);
    std::vector<std::size_t> count(static_cast<std::size_t>(G), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = static_cast<std::size_t>(table.x[i]);
        z_mean[g] += table.z[i];
        y_mean[g] += table.y[i];
        w_mean[g] += (*treat)[i];
        ++count[g];
    }
    for (std::size_t g = 0; g < static_cast<std::size_t>(G); ++g) {
        z_mean[g] /= static_cast<double>(count[g]);
        y_mean[g] /= static_cast<double>(count[g]);
        w_mean[g] /= static_cast<double>(count[g]);
    }
    double s_zy = 0.0, s_zw = 0.0, s_zz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = static_cast<std::size_t>(table.x[i]);
        const double zt = table.z[i] - z_mean[g];
        s_zy += zt * (table.y[i] - y_mean[g]);
        s_zw += zt * ((*treat)[i] - w_mean[g]);
        s_zz += zt * zt;
    }
    if (s_zz <= 0.0) throw NumericError("instrument does not vary within any group");
    if (s_zw == 0.0) throw NumericError("zero first-stage covariance: degenerate instrument");

    NaiveIvResult result;
    result.coefficient = s_zy / s_zw;
    result.first_stage_cov = s_zw / static_cast<double>(n);

    double score_sq = 0.0;
    std::vector<double> cluster_score(static_cast<std::size_t>(G), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = static_cast<std::size_t>(table.x[i]);
        const double zt = table.z[i] - z_mean[g];
        const double u = (table.y[i] - y_mean[g]) - result.coefficient * ((*treat)[i] - w_mean[g]);
        score_sq += zt * u * zt * u;
        cluster_score[g] += zt * u;
    }
    double cluster_sq = 0.0;
    for (double s : cluster_score) cluster_sq += s * s;
    result.se_robust = std::sqrt(score_sq) / std::fabs(s_zw);
    result.se_cluster = std::sqrt(cluster_sq) / std::fabs(s_zw);
    return result;
}

}  // namespace mtebounds
