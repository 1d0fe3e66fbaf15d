#include "qexp/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "qexp/agents.hpp"
#include "qexp/deformed_math.hpp"
#include "qexp/distributions.hpp"
#include "qexp/nn_core.hpp"
#include "qexp/oracles.hpp"
#include "qexp/policy_heads.hpp"
#include "qexp/samplers.hpp"

namespace qexp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Running maximum that sticks at NaN so a broken value can never pass.
class Worst {
public:
    void add(double x) {
        if (std::isnan(x) || std::isnan(value_)) {
            value_ = std::numeric_limits<double>::quiet_NaN();
        } else {
            value_ = std::max(value_, x);
        }
    }
    double value() const { return value_; }

private:
    double value_ = 0.0;
};

ValidationCheck make_check(std::string_view suite, std::string name, double value, double tolerance) {
    return {std::string(suite), std::move(name), value, tolerance, value < tolerance};
}

/// |a - b| scaled by max(1, |b|): relative for large magnitudes, absolute near zero.
double scaled_error(double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::abs(b));
}

double max_scaled_error(std::span<const double> a, std::span<const double> b) {
    Worst w;
    for (std::size_t i = 0; i < a.size(); ++i) w.add(scaled_error(a[i], b[i]));
    return w.value();
}

Vector vec1(double x) {
    Vector v(1);
    v[0] = x;
    return v;
}

Matrix random_chol(int n, Rng& rng, double lo = 0.4, double hi = 1.5) {
    Matrix l = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        l(i, i) = rng.uniform(lo, hi);
        for (int j = 0; j < i; ++j) l(i, j) = rng.uniform(-0.4, 0.4);
    }
    return l;
}

Vector random_vector(int n, Rng& rng, double lo, double hi) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
    return v;
}

// ---------------------------------------------------------------- math

std::vector<ValidationCheck> math_suite(const ValidationOptions& opts) {
    constexpr std::string_view s = "math";
    Rng rng = Rng::derive(0, opts.seed, StreamPurpose::Oracle);
    std::vector<ValidationCheck> out;

    Worst roundtrip;
    for (double q = -1.0; q <= 2.9; q += 0.05) {
        const EntropicIndex qi(q);
        for (double x = 0.05; x <= 20.0; x *= 1.1) {
            roundtrip.add(std::abs(exp_q(ln_q(x, qi), qi) - x) / x);
        }
    }
    out.push_back(make_check(s, "exp_q_ln_q_roundtrip", roundtrip.value(), 1e-10));

    Worst continuity;
    for (double dq : {-1e-6, 1e-6}) {
        const EntropicIndex qi(1.0 + dq);
        for (double x = -5.0; x <= 5.0; x += 0.01) {
            continuity.add(std::abs(exp_q(x, qi) - std::exp(x)) / std::exp(x));
        }
        for (double x = 0.1; x <= 10.0; x += 0.01) {
            continuity.add(scaled_error(ln_q(x, qi), std::log(x)));
        }
    }
    out.push_back(make_check(s, "q_to_one_continuity", continuity.value(), 1e-4));

    Worst gbmm;
    for (double q = -0.99; q < 3.0; q += 0.01) {
        gbmm.add(std::abs(gbmm_index_inverse(gbmm_index_map(EntropicIndex(q))).value() - q));
    }
    for (double qt = -0.99; qt < 2.0; qt += 0.01) {
        gbmm.add(std::abs(gbmm_index_map(gbmm_index_inverse(EntropicIndex(qt))).value() - qt));
    }
    out.push_back(make_check(s, "gbmm_index_roundtrip", gbmm.value(), 1e-12));

    // Factorials, half-integers and the recurrences for log-gamma and digamma.
    Worst special;
    double log_fact = 0.0;
    double harmonic = 0.0;
    for (int n = 1; n <= 60; ++n) {
        special.add(scaled_error(log_gamma(n), log_fact));
        special.add(scaled_error(digamma(n), harmonic - std::numbers::egamma));
        log_fact += std::log(static_cast<double>(n));
        harmonic += 1.0 / n;
    }
    double log_half = 0.5 * std::log(std::numbers::pi);  // Gamma(1/2) = sqrt(pi)
    double psi_half = -std::numbers::egamma - 2.0 * std::numbers::ln2;
    for (int n = 0; n < 40; ++n) {
        const double x = n + 0.5;
        special.add(scaled_error(log_gamma(x), log_half));
        special.add(scaled_error(digamma(x), psi_half));
        log_half += std::log(x);
        psi_half += 1.0 / x;
    }
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(0.01, 50.0);
        special.add(scaled_error(log_gamma(x + 1.0), log_gamma(x) + std::log(x)));
        special.add(scaled_error(digamma(x + 1.0), digamma(x) + 1.0 / x));
        special.add(scaled_error(log_gamma(x), std::lgamma(x)));
    }
    out.push_back(make_check(s, "log_gamma_digamma", special.value(), 1e-10));
    return out;
}

// ---------------------------------------------------------------- density

double integrate_line(const std::function<double(double)>& f, double lo, double hi) {
    const auto r = oracles::integrate_adaptive({f, lo, hi, 1e-8, 15});
    return r.value;
}

/// Bivariate Cauchy proposal centred at mu with scale factor s.
struct CauchyProposal {
    Vector mu;
    Matrix s;

    std::vector<double> draw(Rng& rng) const {
        Vector z(2);
        z[0] = rng.normal();
        z[1] = rng.normal();
        const double w = std::abs(rng.normal());
        const Vector x = mu + s * z / w;
        return {x[0], x[1]};
    }
    double density(std::span<const double> x) const {
        Vector d(2);
        d[0] = x[0] - mu[0];
        d[1] = x[1] - mu[1];
        const Vector y = s.triangularView<Eigen::Lower>().solve(d);
        const double det = s(0, 0) * s(1, 1);
        return 1.0 / (2.0 * std::numbers::pi * det) * std::pow(1.0 + y.squaredNorm(), -1.5);
    }
};

std::vector<ValidationCheck> density_suite(const ValidationOptions& opts) {
    constexpr std::string_view s = "density";
    Rng rng = Rng::derive(0, opts.seed, StreamPurpose::Oracle).split(2);
    std::vector<ValidationCheck> out;

    Worst gauss, squashed, student, q_light, q_heavy, beta;
    for (int i = 0; i < opts.density_draws; ++i) {
        const auto ls = LocScaleParams::diagonal(vec1(rng.uniform(-1, 1)), vec1(rng.uniform(0.2, 2.0)));
        gauss.add(std::abs(
            integrate_line([&](double x) { return std::exp(log_prob_gaussian(ls, vec1(x))); }, -kInf, kInf) - 1.0));

        const auto sq = LocScaleParams::diagonal(vec1(rng.uniform(-1, 1)), vec1(rng.uniform(0.2, 1.5)));
        squashed.add(std::abs(
            integrate_line([&](double x) { return std::exp(log_prob_squashed_gaussian(sq, vec1(x))); }, -1.0, 1.0) -
            1.0));

        const StudentTParams st{LocScaleParams::diagonal(vec1(rng.uniform(-1, 1)), vec1(rng.uniform(0.2, 2.0))),
                                rng.uniform(1.0, 30.0)};
        student.add(std::abs(
            integrate_line([&](double x) { return std::exp(log_prob_student_t(st, vec1(x))); }, -kInf, kInf) - 1.0));

        const QGaussianParams ql{LocScaleParams::diagonal(vec1(rng.uniform(-1, 1)), vec1(rng.uniform(0.2, 2.0))),
                                 EntropicIndex(rng.uniform(-1.0, 0.95))};
        const double r = ql.loc_scale.scale_chol()(0, 0) * std::sqrt(2.0 / (1.0 - ql.q.value()));
        const double c = ql.loc_scale.mu()[0];
        q_light.add(std::abs(
            integrate_line([&](double x) { return std::exp(log_prob_q_gaussian(ql, vec1(x))); }, c - r, c + r) - 1.0));

        const QGaussianParams qh{LocScaleParams::diagonal(vec1(rng.uniform(-1, 1)), vec1(rng.uniform(0.2, 2.0))),
                                 EntropicIndex(rng.uniform(1.05, 2.5))};
        q_heavy.add(std::abs(
            integrate_line([&](double x) { return std::exp(log_prob_q_gaussian(qh, vec1(x))); }, -kInf, kInf) - 1.0));

        const double lo = rng.uniform(-3.0, 0.0);
        const double hi = lo + rng.uniform(0.5, 4.0);
        const BetaParams bp{vec1(rng.uniform(1.05, 8.0)), vec1(rng.uniform(1.05, 8.0)), vec1(lo), vec1(hi)};
        beta.add(
            std::abs(integrate_line([&](double x) { return std::exp(log_prob_beta(bp, vec1(x))); }, lo, hi) - 1.0));
    }
    out.push_back(make_check(s, "gaussian_1d", gauss.value(), 1e-4));
    out.push_back(make_check(s, "squashed_gaussian_1d", squashed.value(), 1e-4));
    out.push_back(make_check(s, "student_t_1d", student.value(), 1e-4));
    out.push_back(make_check(s, "q_gaussian_light_1d", q_light.value(), 1e-4));
    out.push_back(make_check(s, "q_gaussian_heavy_1d", q_heavy.value(), 1e-4));
    out.push_back(make_check(s, "beta_1d", beta.value(), 1e-4));

    // 2-D: importance-sampled normalization.
    const std::size_t n = opts.monte_carlo_draws;
    auto unbounded = [&](const std::string& name, const LocScaleParams& ls,
                         const std::function<double(const Vector&)>& logp) {
        const CauchyProposal prop{ls.mu(), 2.0 * ls.scale_chol()};
        Rng r = rng.split(name.size());
        const double z = oracles::monte_carlo_normalization(
            [&](std::span<const double> x) {
                Vector v(2);
                v << x[0], x[1];
                return std::exp(logp(v));
            },
            [&](Rng& g) { return prop.draw(g); }, [&](std::span<const double> x) { return prop.density(x); }, n, r);
        out.push_back(make_check(s, name, std::abs(z - 1.0), 1e-2));
    };
    auto boxed = [&](const std::string& name, double lo, double hi, const std::function<double(const Vector&)>& logp) {
        Rng r = rng.split(name.size() + 100);
        const double area = (hi - lo) * (hi - lo);
        const double z = oracles::monte_carlo_normalization(
            [&](std::span<const double> x) {
                Vector v(2);
                v << x[0], x[1];
                return std::exp(logp(v));
            },
            [&](Rng& g) { return std::vector<double>{g.uniform(lo, hi), g.uniform(lo, hi)}; },
            [&](std::span<const double>) { return 1.0 / area; }, n, r);
        out.push_back(make_check(s, name, std::abs(z - 1.0), 1e-2));
    };

    const LocScaleParams g2(random_vector(2, rng, -1, 1), random_chol(2, rng));
    unbounded("gaussian_2d", g2, [&](const Vector& a) { return log_prob_gaussian(g2, a); });
    const StudentTParams t2{LocScaleParams(random_vector(2, rng, -1, 1), random_chol(2, rng)), 2.5};
    unbounded("student_t_2d", t2.loc_scale, [&](const Vector& a) { return log_prob_student_t(t2, a); });
    for (double q : {0.0, 0.5}) {
        const QGaussianParams qp{LocScaleParams(random_vector(2, rng, -1, 1), random_chol(2, rng)), EntropicIndex(q)};
        unbounded(q == 0.0 ? "q_gaussian_2d_q0" : "q_gaussian_2d_q0.5", qp.loc_scale,
                  [&](const Vector& a) { return log_prob_q_gaussian(qp, a); });
    }
    const QGaussianParams qh2{LocScaleParams(random_vector(2, rng, -1, 1), random_chol(2, rng)), EntropicIndex(1.5)};
    unbounded("q_gaussian_2d_q1.5", qh2.loc_scale, [&](const Vector& a) { return log_prob_q_gaussian(qh2, a); });

    const BetaParams b2{random_vector(2, rng, 1.05, 5), random_vector(2, rng, 1.05, 5), Vector::Constant(2, -1.0),
                        Vector::Constant(2, 1.0)};
    boxed("beta_2d", -1.0, 1.0, [&](const Vector& a) {
        if (std::abs(a[0]) >= 1.0 || std::abs(a[1]) >= 1.0) return -kInf;
        return log_prob_beta(b2, a);
    });
    const LocScaleParams sq2(random_vector(2, rng, -0.5, 0.5), random_chol(2, rng, 0.3, 0.9));
    boxed("squashed_gaussian_2d", -1.0, 1.0, [&](const Vector& a) {
        if (std::abs(a[0]) >= 1.0 || std::abs(a[1]) >= 1.0) return -kInf;
        return log_prob_squashed_gaussian(sq2, a);
    });
    return out;
}

// ---------------------------------------------------------------- gradient

/// Packs mu and the lower triangle of L into one vector and back.
std::vector<double> pack_loc_scale(const LocScaleParams& p) {
    std::vector<double> x(p.mu().data(), p.mu().data() + p.dim());
    for (Eigen::Index i = 0; i < p.dim(); ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) x.push_back(p.scale_chol()(i, j));
    }
    return x;
}

LocScaleParams unpack_loc_scale(std::span<const double> x, int n) {
    Vector mu(n);
    Matrix l = Matrix::Zero(n, n);
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) mu[i] = x[k++];
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) l(i, j) = x[k++];
    }
    return LocScaleParams(mu, l);
}

std::vector<double> pack_gradient(const Vector& gmu, const Matrix& gsigma, const Matrix& chol) {
    const Matrix gl = cholesky_gradient(gsigma, chol);
    std::vector<double> g(gmu.data(), gmu.data() + gmu.size());
    for (Eigen::Index i = 0; i < chol.rows(); ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) g.push_back(gl(i, j));
    }
    return g;
}

double fd_error(const oracles::VectorFunction& f, std::span<const double> x, std::span<const double> analytic) {
    const auto fd = oracles::finite_diff_gradient(f, x, 1e-5);
    return max_scaled_error(analytic, fd);
}

std::vector<ValidationCheck> gradient_suite(const ValidationOptions& opts) {
    constexpr std::string_view s = "gradient";
    Rng rng = Rng::derive(0, opts.seed, StreamPurpose::Oracle).split(3);
    std::vector<ValidationCheck> out;
    const int n_inst = opts.gradient_instances;

    Worst gauss, squashed, student, q_light, q_heavy, beta;
    for (int i = 0; i < n_inst; ++i) {
        const int n = 1 + static_cast<int>(rng.index(3));
        const LocScaleParams ls(random_vector(n, rng, -1, 1), random_chol(n, rng));
        const Vector a = sample_gaussian(ls, rng);
        const auto x = pack_loc_scale(ls);

        const auto gg = grad_log_prob_gaussian(ls, a);
        gauss.add(fd_error([&](std::span<const double> y) { return log_prob_gaussian(unpack_loc_scale(y, n), a); },
                           x, pack_gradient(gg.mu, gg.sigma, ls.scale_chol())));

        const Vector sa = sample_squashed_gaussian(ls, rng).cwiseMax(-0.99).cwiseMin(0.99);
        const auto gs = grad_log_prob_squashed_gaussian(ls, sa);
        squashed.add(
            fd_error([&](std::span<const double> y) { return log_prob_squashed_gaussian(unpack_loc_scale(y, n), sa); },
                     x, pack_gradient(gs.mu, gs.sigma, ls.scale_chol())));

        const StudentTParams st{ls, rng.uniform(1.0, 20.0)};
        const Vector ta = sample_student_t(st, rng);
        const auto gt = grad_log_prob_student_t(st, ta);
        auto gt_flat = pack_gradient(gt.mu, gt.sigma, ls.scale_chol());
        gt_flat.push_back(gt.nu);
        auto xt = x;
        xt.push_back(st.nu);
        student.add(fd_error(
            [&](std::span<const double> y) {
                return log_prob_student_t({unpack_loc_scale(y, n), y.back()}, ta);
            },
            xt, gt_flat));

        // Light tails: keep the action well inside the support so the
        // perturbed parameters still contain it.
        const QGaussianParams ql{ls, EntropicIndex(rng.uniform(-1.0, 0.9))};
        const Vector la = ls.mu() + 0.7 * (sample_q_gaussian(ql, rng) - ls.mu());
        const auto gl = grad_log_prob_q_gaussian(ql, la);
        q_light.add(fd_error(
            [&](std::span<const double> y) { return log_prob_q_gaussian({unpack_loc_scale(y, n), ql.q}, la); }, x,
            pack_gradient(gl.mu, gl.sigma, ls.scale_chol())));

        // Normalizable heavy tails need 1/(q-1) > n/2.
        const double q_max = std::min(2.9, 1.0 + 2.0 / n - 0.05);
        const QGaussianParams qh{ls, EntropicIndex(rng.uniform(1.05, q_max))};
        const Vector ha = sample_q_gaussian(qh, rng);
        const auto gh = grad_log_prob_q_gaussian(qh, ha);
        q_heavy.add(fd_error(
            [&](std::span<const double> y) { return log_prob_q_gaussian({unpack_loc_scale(y, n), qh.q}, ha); }, x,
            pack_gradient(gh.mu, gh.sigma, ls.scale_chol())));

        const BetaParams bp{random_vector(n, rng, 1.05, 6), random_vector(n, rng, 1.05, 6), Vector::Constant(n, -2.0),
                            Vector::Constant(n, 1.0)};
        const Vector ba = sample_beta(bp, rng).cwiseMax(-1.98).cwiseMin(0.98);
        const auto gb = grad_log_prob_beta(bp, ba);
        std::vector<double> xb, gbf;
        for (int d = 0; d < n; ++d) {
            xb.push_back(bp.alpha[d]);
            gbf.push_back(gb.alpha[d]);
        }
        for (int d = 0; d < n; ++d) {
            xb.push_back(bp.beta[d]);
            gbf.push_back(gb.beta[d]);
        }
        beta.add(fd_error(
            [&](std::span<const double> y) {
                BetaParams p = bp;
                for (int d = 0; d < n; ++d) {
                    p.alpha[d] = y[d];
                    p.beta[d] = y[n + d];
                }
                return log_prob_beta(p, ba);
            },
            xb, gbf));
    }
    out.push_back(make_check(s, "gaussian", gauss.value(), 1e-5));
    out.push_back(make_check(s, "squashed_gaussian", squashed.value(), 1e-5));
    out.push_back(make_check(s, "student_t", student.value(), 1e-5));
    out.push_back(make_check(s, "q_gaussian_light", q_light.value(), 1e-5));
    out.push_back(make_check(s, "q_gaussian_heavy", q_heavy.value(), 1e-5));
    out.push_back(make_check(s, "beta", beta.value(), 1e-5));

    // Policy heads: raw network outputs to log-density.
    struct HeadCase {
        std::string name;
        PolicyFamily family;
        double q;
    };
    const std::vector<HeadCase> heads = {
        {"head_gaussian", PolicyFamily::Gaussian, 0.0},
        {"head_squashed_gaussian", PolicyFamily::SquashedGaussian, 0.0},
        {"head_beta", PolicyFamily::Beta, 0.0},
        {"head_student_t", PolicyFamily::StudentT, 0.0},
        {"head_q_gaussian_light", PolicyFamily::QGaussian, 0.0},
        {"head_q_gaussian_heavy", PolicyFamily::QGaussian, 1.5},
    };
    std::vector<HeadCase> actor_cases = heads;
    for (const auto& hc : heads) {
        PolicyHeadConfig cfg;
        cfg.family = hc.family;
        cfg.q = hc.q;
        cfg.action_dim = hc.family == PolicyFamily::QGaussian && hc.q > 1.0 ? 1 : 2;
        cfg.action_low.assign(cfg.action_dim, -2.0);
        cfg.action_high.assign(cfg.action_dim, 1.5);
        Worst w;
        for (int i = 0; i < n_inst; ++i) {
            std::vector<double> raw(cfg.raw_size());
            for (double& r : raw) r = rng.uniform(-1.0, 1.0);
            const auto head_out = head_forward(cfg, raw);
            auto a = policy_sample(cfg, head_out, rng);
            if (cfg.family == PolicyFamily::QGaussian || cfg.family == PolicyFamily::SquashedGaussian ||
                cfg.family == PolicyFamily::Beta) {
                const auto mean = policy_mean_action(cfg, head_out);
                for (std::size_t d = 0; d < a.size(); ++d) a[d] = mean[d] + 0.7 * (a[d] - mean[d]);
            }
            PolicyParamGradient pg(cfg);
            policy_accumulate_grad(cfg, head_out, a, 1.0, pg);
            const auto analytic = head_backward(cfg, head_out, pg);
            w.add(fd_error([&](std::span<const double> y) { return policy_log_prob(cfg, head_forward(cfg, y), a); },
                           raw, analytic));
        }
        out.push_back(make_check(s, hc.name, w.value(), 1e-5));
    }

    // MLP backprop of a random linear functional of the outputs.
    Worst mlp;
    for (int i = 0; i < n_inst; ++i) {
        std::vector<std::size_t> sizes{1 + rng.index(4)};
        const std::size_t hidden = 1 + rng.index(3);
        for (std::size_t h = 0; h < hidden; ++h) sizes.push_back(2 + rng.index(8));
        sizes.push_back(1 + rng.index(3));
        Mlp net = Mlp::initialized(sizes, rng);
        Batch x(3, sizes.front());
        for (double& v : x.data) v = rng.uniform(-1, 1);
        Batch coeff(3, sizes.back());
        for (double& v : coeff.data) v = rng.uniform(-1, 1);
        MlpTape tape;
        mlp_forward(net, x, &tape);
        std::vector<double> grad(net.param_count(), 0.0);
        mlp_backward(net, tape, coeff, grad);
        std::vector<double> p0(net.params().begin(), net.params().end());
        const auto f = [&](std::span<const double> y) {
            Mlp probe = net;
            std::copy(y.begin(), y.end(), probe.params().begin());
            const Batch o = mlp_forward(probe, x);
            double acc = 0.0;
            for (std::size_t k = 0; k < o.data.size(); ++k) acc += o.data[k] * coeff.data[k];
            return acc;
        };
        mlp.add(fd_error(f, p0, grad));
    }
    out.push_back(make_check(s, "mlp_backprop", mlp.value(), 1e-6));

    // Weighted-likelihood actor loss with respect to network parameters.
    for (const auto& hc : actor_cases) {
        PolicyHeadConfig cfg;
        cfg.family = hc.family;
        cfg.q = hc.q;
        cfg.action_dim = 1;
        Worst w;
        const int instances = n_inst;
        for (int i = 0; i < instances; ++i) {
            Actor actor(cfg, 3, {6}, rng);
            Batch states(6, 3);
            for (double& v : states.data) v = rng.uniform(-1, 1);
            const auto outs = actor.forward(states);
            Batch actions(6, 1);
            std::vector<double> weights(6);
            for (std::size_t r = 0; r < 6; ++r) {
                const auto a = policy_sample(cfg, outs[r], rng);
                const auto mean = policy_mean_action(cfg, outs[r]);
                actions(r, 0) = mean[0] + 0.5 * (a[0] - mean[0]);
                weights[r] = rng.uniform(0.0, 3.0);
            }
            Rng loss_rng(7);
            const auto loss = weighted_likelihood_loss(actor, states, actions, weights, loss_rng);
            std::vector<double> p0(actor.net().params().begin(), actor.net().params().end());
            const auto f = [&](std::span<const double> y) {
                Actor probe = actor;
                std::copy(y.begin(), y.end(), probe.net().params().begin());
                Rng r(7);
                return weighted_likelihood_loss(probe, states, actions, weights, r).loss;
            };
            w.add(fd_error(f, p0, loss.gradient));
        }
        out.push_back(make_check(s, "actor_loss_" + hc.name.substr(5), w.value(), 1e-5));
    }
    return out;
}

// ---------------------------------------------------------------- sampler

std::vector<double> draw_1d(std::size_t n, const std::function<Vector(Rng&)>& draw, Rng& rng) {
    std::vector<double> xs(n);
    for (auto& x : xs) x = draw(rng)[0];
    return xs;
}

std::vector<ValidationCheck> sampler_suite(const ValidationOptions& opts) {
    constexpr std::string_view s = "sampler";
    Rng rng = Rng::derive(0, opts.seed, StreamPurpose::Oracle).split(4);
    std::vector<ValidationCheck> out;
    const std::size_t n = opts.sampler_draws;

    auto ks = [&](const std::string& name, const std::function<Vector(Rng&)>& draw,
                  const std::function<double(double)>& logp, double lower) {
        const auto xs = draw_1d(n, draw, rng);
        const auto r = oracles::ks_test_density(xs, [&](double x) { return std::exp(logp(x)); }, lower);
        out.push_back(make_check(s, "ks_" + name, r.statistic, r.threshold));
    };

    const auto g = LocScaleParams::diagonal(vec1(0.3), vec1(1.2));
    ks("gaussian", [&](Rng& r) { return sample_gaussian(g, r); },
       [&](double x) { return log_prob_gaussian(g, vec1(x)); }, -kInf);
    const auto sq = LocScaleParams::diagonal(vec1(0.4), vec1(0.8));
    ks("squashed_gaussian", [&](Rng& r) { return sample_squashed_gaussian(sq, r); },
       [&](double x) { return std::abs(x) < 1.0 ? log_prob_squashed_gaussian(sq, vec1(x)) : -kInf; }, -1.0);
    const StudentTParams st{LocScaleParams::diagonal(vec1(-0.2), vec1(0.7)), 2.5};
    ks("student_t", [&](Rng& r) { return sample_student_t(st, r); },
       [&](double x) { return log_prob_student_t(st, vec1(x)); }, -kInf);
    const BetaParams bp{vec1(2.0), vec1(1.3), vec1(-1.0), vec1(2.0)};
    ks("beta", [&](Rng& r) { return sample_beta(bp, r); },
       [&](double x) { return (x > -1.0 && x < 2.0) ? log_prob_beta(bp, vec1(x)) : -kInf; }, -1.0);
    for (double q : {-0.5, 0.0, 0.5, 1.5, 2.0, 2.5}) {
        const QGaussianParams qp{LocScaleParams::diagonal(vec1(0.1), vec1(0.9)), EntropicIndex(q)};
        const double lower = q < 1.0 ? 0.1 - 0.9 * std::sqrt(2.0 / (1.0 - q)) : -kInf;
        char name[32];
        std::snprintf(name, sizeof name, "q_gaussian_q%g", q);
        ks(name, [&](Rng& r) { return sample_q_gaussian(qp, r); },
           [&](double x) { return log_prob_q_gaussian(qp, vec1(x)); }, lower);
    }

    // Two independent light-tailed samplers must agree.
    for (double q : {0.0, 0.5}) {
        const QGaussianParams qp{LocScaleParams::diagonal(vec1(0.0), vec1(1.0)), EntropicIndex(q)};
        const auto a = draw_1d(n, [&](Rng& r) { return sample_q_gaussian_gbmm(qp, r); }, rng);
        const auto b = draw_1d(n, [&](Rng& r) { return sample_stochastic_rep(qp, r); }, rng);
        const auto r = oracles::ks_two_sample(a, b);
        out.push_back(make_check(s, q == 0.0 ? "gbmm_vs_stochastic_rep_q0" : "gbmm_vs_stochastic_rep_q0.5",
                                 r.statistic, r.threshold));
    }

    // Light-tailed draws never leave the support, including correlated 2-D.
    std::size_t outside = 0;
    std::size_t total = 0;
    for (double q : {-0.5, 0.0, 0.5}) {
        for (int dim : {1, 2, 3}) {
            const QGaussianParams qp{LocScaleParams(random_vector(dim, rng, -1, 1), random_chol(dim, rng)),
                                     EntropicIndex(q)};
            for (std::size_t i = 0; i < n / 9; ++i) {
                outside += support_contains(qp, sample_q_gaussian(qp, rng)) ? 0 : 1;
                ++total;
            }
        }
    }
    out.push_back(make_check(s, "light_tail_in_support", static_cast<double>(outside) / total, 0.5 / total));

    const QGaussianParams q2{LocScaleParams::diagonal(vec1(0.0), vec1(1.0)), EntropicIndex(2.0)};
    const auto xs = draw_1d(n, [&](Rng& r) { return sample_q_gaussian(q2, r); }, rng);
    const auto chi = oracles::chi2_test(xs, [&](double x) { return std::exp(log_prob_q_gaussian(q2, vec1(x))); },
                                        -10.0, 10.0, 40);
    out.push_back(make_check(s, "chi2_q_gaussian_q2", chi.statistic, chi.threshold));
    return out;
}

// ---------------------------------------------------------------- sparsemax

std::vector<ValidationCheck> sparsemax_suite(const ValidationOptions& opts) {
    constexpr std::string_view s = "sparsemax";
    Rng rng = Rng::derive(0, opts.seed, StreamPurpose::Oracle).split(5);
    Worst w;
    Worst sum;
    for (int i = 0; i < opts.sparsemax_vectors; ++i) {
        const int len = 2 + static_cast<int>(rng.index(9));
        const double temperature = rng.uniform(0.1, 3.0);
        Vector v = random_vector(len, rng, -2.0, 2.0);
        const Vector p = sparsemax({v, temperature});
        std::vector<double> scaled(len);
        for (int k = 0; k < len; ++k) scaled[k] = v[k] / temperature;
        const auto ref = oracles::project_simplex_bruteforce(scaled);
        for (int k = 0; k < len; ++k) w.add(std::abs(p[k] - ref[k]));
        sum.add(std::abs(p.sum() - 1.0));
    }
    return {make_check(s, "bruteforce_linf", w.value(), 1e-9), make_check(s, "sums_to_one", sum.value(), 1e-12)};
}

// ---------------------------------------------------------------- equivalence

std::vector<ValidationCheck> equivalence_suite(const ValidationOptions& opts) {
    constexpr std::string_view s = "equivalence";
    Rng rng = Rng::derive(0, opts.seed, StreamPurpose::Oracle).split(6);
    std::vector<ValidationCheck> out;

    // q' = 1 weights reproduce the exponential advantage weights.
    Worst loss_gap;
    for (PolicyFamily fam : {PolicyFamily::Gaussian, PolicyFamily::StudentT, PolicyFamily::Beta}) {
        PolicyHeadConfig cfg;
        cfg.family = fam;
        cfg.action_dim = 2;
        cfg.action_low.assign(2, -1.0);
        cfg.action_high.assign(2, 1.0);
        Actor actor(cfg, 4, {8}, rng);
        Batch states(32, 4);
        for (double& v : states.data) v = rng.uniform(-1, 1);
        const auto outs = actor.forward(states);
        Batch actions(32, 2);
        std::vector<double> w_tawac(32), w_awac(32);
        const double tau = rng.uniform(0.1, 2.0);
        for (std::size_t r = 0; r < 32; ++r) {
            const auto a = policy_sample(cfg, outs[r], rng);
            actions(r, 0) = a[0];
            actions(r, 1) = a[1];
            const double adv = rng.uniform(-3.0, 3.0);
            w_tawac[r] = tawac_weight(adv, tau, 1.0, 100.0);
            w_awac[r] = awac_weight(adv, tau, 100.0);
            loss_gap.add(scaled_error(w_tawac[r], w_awac[r]));
        }
        Rng r1(3), r2(3);
        const auto l1 = weighted_likelihood_loss(actor, states, actions, w_tawac, r1);
        const auto l2 = weighted_likelihood_loss(actor, states, actions, w_awac, r2);
        loss_gap.add(scaled_error(l1.loss, l2.loss));
        loss_gap.add(max_scaled_error(l1.gradient, l2.gradient));
    }
    out.push_back(make_check(s, "tawac_q1_matches_awac", loss_gap.value(), 1e-10));

    // Large nu approaches the Gaussian within 2.5 scale units of the mean.
    Worst t_gauss;
    for (int i = 0; i < 20; ++i) {
        const auto ls = LocScaleParams::diagonal(vec1(rng.uniform(-1, 1)), vec1(rng.uniform(0.3, 2.0)));
        const StudentTParams st{ls, 1000.0};
        for (double z = -2.5; z <= 2.5; z += 0.05) {
            const Vector a = vec1(ls.mu()[0] + z * ls.scale_chol()(0, 0));
            t_gauss.add(std::abs(log_prob_student_t(st, a) - log_prob_gaussian(ls, a)));
        }
    }
    out.push_back(make_check(s, "student_t_nu1000_vs_gaussian", t_gauss.value(), 1e-2));

    // Student's t(nu, s) is the q-Gaussian with q = 1 + 2/(nu+1), sigma = s sqrt(nu/(nu+1)).
    Worst t_q;
    for (int i = 0; i < 50; ++i) {
        const double nu = rng.uniform(0.5, 30.0);
        const double scale = rng.uniform(0.3, 2.0);
        const double mu = rng.uniform(-1, 1);
        const StudentTParams st{LocScaleParams::diagonal(vec1(mu), vec1(scale)), nu};
        const QGaussianParams qp{LocScaleParams::diagonal(vec1(mu), vec1(scale * std::sqrt(nu / (nu + 1.0)))),
                                 EntropicIndex(1.0 + 2.0 / (nu + 1.0))};
        for (double x = -5.0; x <= 5.0; x += 0.1) {
            t_q.add(std::abs(std::exp(log_prob_student_t(st, vec1(x))) - std::exp(log_prob_q_gaussian(qp, vec1(x)))));
        }
    }
    out.push_back(make_check(s, "student_t_is_heavy_q_gaussian", t_q.value(), 1e-8));
    return out;
}

// ---------------------------------------------------------------- critic

std::vector<ValidationCheck> critic_suite(const ValidationOptions& opts) {
    constexpr std::string_view s = "critic";
    Rng rng = Rng::derive(0, opts.seed, StreamPurpose::Oracle).split(7);

    // s0 -> s1 -> s2 -> end, reward -1 per step.
    constexpr double gamma = 0.99;
    const double q_star[3] = {-1.0 - gamma * (1.0 + gamma), -1.0 - gamma, -1.0};
    Mlp net = Mlp::initialized({3, 16, 1}, rng);
    Mlp target = net;
    AdamState opt(net.param_count(), 5e-3, 0.9, 0.999);
    Batch inputs(3, 3);
    for (int i = 0; i < 3; ++i) inputs(i, i) = 1.0;

    auto max_error = [&]() {
        const Batch q = mlp_forward(net, inputs);
        double e = 0.0;
        for (int i = 0; i < 3; ++i) e = std::max(e, std::abs(q(i, 0) - q_star[i]));
        return e;
    };

    double reached = kInf;
    for (int step = 1; step <= opts.critic_updates; ++step) {
        const Batch next = mlp_forward(target, inputs);
        const std::vector<double> y = {-1.0 + gamma * next(1, 0), -1.0 + gamma * next(2, 0), -1.0};
        regression_step(net, opt, inputs, y);
        polyak_update(target, net, 0.05);
        if (max_error() < 1e-2) {
            reached = step;
            break;
        }
    }
    return {make_check(s, "td_chain_updates_to_1e-2", reached, opts.critic_updates + 0.5),
            make_check(s, "td_chain_final_error", max_error(), 1e-2)};
}

} // namespace

const std::vector<std::string>& validation_suites() {
    static const std::vector<std::string> names = {"math",     "density",     "gradient", "sampler",
                                                   "sparsemax", "equivalence", "critic"};
    return names;
}

std::vector<ValidationCheck> run_validation_suite(std::string_view suite, const ValidationOptions& options) {
    if (suite == "math") return math_suite(options);
    if (suite == "density") return density_suite(options);
    if (suite == "gradient") return gradient_suite(options);
    if (suite == "sampler") return sampler_suite(options);
    if (suite == "sparsemax") return sparsemax_suite(options);
    if (suite == "equivalence") return equivalence_suite(options);
    if (suite == "critic") return critic_suite(options);
    throw std::invalid_argument("unknown validation suite: " + std::string(suite));
}

void write_validation_csv(std::ostream& out, const std::vector<ValidationCheck>& checks) {
    out << "suite,check,value,tolerance,pass\n";
    const auto old = out.precision(10);
    for (const auto& c : checks) {
        out << c.suite << ',' << c.name << ',' << c.value << ',' << c.tolerance << ',' << (c.pass ? 1 : 0) << '\n';
    }
    out.precision(old);
}

} // namespace qexp
