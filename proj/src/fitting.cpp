#include "hom/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "hom/irf.hpp"

namespace hom::fit {

namespace {

constexpr int kIterationCap = 10000;
constexpr double kSimplexTolerance = 1e-10;
constexpr double kObjectiveTolerance = 1e-10;
constexpr double kVanishingShare = 1e-6;

using Columns = std::vector<std::vector<double>>;

// Model, data and weights of one fit. Nonlinear parameters are passed in
// natural units: lorentzian {center_ghz, fwhm_ghz}, single_exp {lifetime},
// biexp {fast, slow}. Linear coefficients multiply the returned columns,
// the last column always being the constant offset.
struct Problem {
    FitContext ctx;
    std::vector<double> x, y, w;
    std::vector<double> edge_lo, edge_hi;
    bool counts = false;

    int n_nonlinear() const { return ctx.model == Model::biexp ? 2 : (ctx.model == Model::single_exp ? 1 : 2); }
    int n_linear() const { return ctx.model == Model::biexp ? 3 : 2; }

    void columns(const std::vector<double> &nl, Columns &cols) const {
        const size_t n = x.size();
        cols.assign(static_cast<size_t>(n_linear()), std::vector<double>(n, 0.0));
        if (ctx.model == Model::lorentzian) {
            lorentz_column(nl[0], nl[1], cols[0]);
        } else {
            const irf::ChannelJitter j = irf::channel_jitter(ctx.detector);
            for (int c = 0; c < n_nonlinear(); ++c) {
                for (size_t i = 0; i < n; ++i) {
                    cols[static_cast<size_t>(c)][i] = irf::decay_cdf(edge_hi[i] - ctx.epoch_ps, nl[static_cast<size_t>(c)], j) -
                                                      irf::decay_cdf(edge_lo[i] - ctx.epoch_ps, nl[static_cast<size_t>(c)], j);
                }
            }
        }
        auto &offset = cols.back();
        if (ctx.model == Model::lorentzian) {
            std::fill(offset.begin(), offset.end(), 1.0);
        } else {
            const double mean_width = (edge_hi.back() - edge_lo.front()) / static_cast<double>(n);
            for (size_t i = 0; i < n; ++i) offset[i] = (edge_hi[i] - edge_lo[i]) / mean_width;
        }
    }

    void lorentz_column(double center, double fwhm, std::vector<double> &col) const {
        auto lorentz = [](double dx, double width) {
            const double hw = 0.5 * width;
            return hw / (M_PI * (dx * dx + hw * hw));
        };
        if (ctx.instrument == InstrumentShape::lorentzian || ctx.instrument_fwhm_ghz == 0.0) {
            const double total = fwhm + ctx.instrument_fwhm_ghz;
            for (size_t i = 0; i < x.size(); ++i) col[i] = lorentz(x[i] - center, total);
            return;
        }
        // Voigt by direct quadrature over the Gaussian instrument response.
        const double sigma = ctx.instrument_fwhm_ghz * irf::kGaussianFwhmToSigma;
        constexpr int kNodes = 241;
        std::vector<double> u(kNodes), g(kNodes);
        double norm = 0.0;
        for (int k = 0; k < kNodes; ++k) {
            u[static_cast<size_t>(k)] = sigma * (-6.0 + 12.0 * k / (kNodes - 1));
            g[static_cast<size_t>(k)] = std::exp(-0.5 * std::pow(u[static_cast<size_t>(k)] / sigma, 2));
            norm += g[static_cast<size_t>(k)];
        }
        for (size_t i = 0; i < x.size(); ++i) {
            double acc = 0.0;
            for (int k = 0; k < kNodes; ++k) {
                acc += g[static_cast<size_t>(k)] * lorentz(x[i] - center - u[static_cast<size_t>(k)], fwhm);
            }
            col[i] = acc / norm;
        }
    }
};

struct LinearSolution {
    std::vector<double> coef;
    double chi2 = std::numeric_limits<double>::infinity();
};

// Weighted least squares with non-negative coefficients, by enumerating the
// active sets of the (at most three) columns.
LinearSolution solve_linear(const Problem &p, const Columns &cols) {
    const auto n = static_cast<Eigen::Index>(p.x.size());
    const int m = static_cast<int>(cols.size());
    Eigen::MatrixXd a(n, m);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sw = std::sqrt(p.w[static_cast<size_t>(i)]);
        b(i) = sw * p.y[static_cast<size_t>(i)];
        for (int c = 0; c < m; ++c) a(i, c) = sw * cols[static_cast<size_t>(c)][static_cast<size_t>(i)];
    }
    LinearSolution best;
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        std::vector<int> active;
        for (int c = 0; c < m; ++c) {
            if (mask & (1u << c)) active.push_back(c);
        }
        Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(active.size()));
        for (size_t k = 0; k < active.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(active[k]);
        const Eigen::VectorXd sol = sub.colPivHouseholderQr().solve(b);
        if (!sol.allFinite() || (sol.array() < 0.0).any()) continue;
        const double chi2 = (sub * sol - b).squaredNorm();
        if (chi2 < best.chi2) {
            best.chi2 = chi2;
            best.coef.assign(static_cast<size_t>(m), 0.0);
            for (size_t k = 0; k < active.size(); ++k) best.coef[static_cast<size_t>(active[k])] = sol(static_cast<Eigen::Index>(k));
        }
    }
    if (best.coef.empty()) {
        best.coef.assign(static_cast<size_t>(m), 0.0);
        best.chi2 = b.squaredNorm();
    }
    return best;
}

double objective(const Problem &p, const std::vector<double> &nl) {
    for (double v : nl) {
        if (!std::isfinite(v) || v <= 0.0) return std::numeric_limits<double>::infinity();
    }
    Columns cols;
    p.columns(nl, cols);
    return solve_linear(p, cols).chi2;
}

// Maps natural nonlinear parameters to the optimiser's unconstrained coordinates.
struct Transform {
    Model model;
    double center_ref = 0.0;
    double center_scale = 1.0;

    std::vector<double> to_u(const std::vector<double> &nl) const {
        if (model == Model::lorentzian) return {(nl[0] - center_ref) / center_scale, std::log(nl[1])};
        std::vector<double> u;
        for (double v : nl) u.push_back(std::log(v));
        return u;
    }
    std::vector<double> from_u(const double *u, size_t n) const {
        if (model == Model::lorentzian) return {center_ref + center_scale * u[0], std::exp(u[1])};
        std::vector<double> nl;
        for (size_t i = 0; i < n; ++i) nl.push_back(std::exp(u[i]));
        return nl;
    }
};

struct Minimizer {
    const Problem *problem;
    Transform transform;
};

double gsl_objective(const gsl_vector *v, void *params) {
    const auto *m = static_cast<const Minimizer *>(params);
    if (m->problem->ctx.model == Model::lorentzian) {
        // Centre is not positive-constrained; guard only the width.
        std::vector<double> nl = m->transform.from_u(v->data, v->size);
        if (!std::isfinite(nl[1]) || nl[1] <= 0.0) return GSL_POSINF;
        Columns cols;
        m->problem->columns(nl, cols);
        return solve_linear(*m->problem, cols).chi2;
    }
    return objective(*m->problem, m->transform.from_u(v->data, v->size));
}

struct SimplexResult {
    std::vector<double> nl;
    int iterations = 0;
};

SimplexResult run_simplex(const Problem &p, const Transform &t, const std::vector<double> &start, double step) {
    const std::vector<double> u0 = t.to_u(start);
    const size_t dim = u0.size();
    Minimizer m{&p, t};
    gsl_multimin_function fn{&gsl_objective, dim, &m};
    // Objective of the zero model; sets the floor below which changes are round-off.
    double f_ref = 0.0;
    for (size_t i = 0; i < p.y.size(); ++i) f_ref += p.w[i] * p.y[i] * p.y[i];
    const size_t window = 20 * (dim + 1);

    gsl_vector *x = gsl_vector_alloc(dim);
    gsl_vector *ss = gsl_vector_alloc(dim);
    gsl_multimin_fminimizer *s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
    SimplexResult out;
    std::vector<double> u = u0;
    for (int round = 0; round < 2; ++round) {
        for (size_t i = 0; i < dim; ++i) {
            gsl_vector_set(x, i, u[i]);
            gsl_vector_set(ss, i, round == 0 ? step : 0.01 * step);
        }
        gsl_multimin_fminimizer_set(s, &fn, x, ss);
        bool converged = false;
        std::vector<double> best;
        for (int it = 0; it < kIterationCap; ++it) {
            ++out.iterations;
            if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
            if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), kSimplexTolerance) == GSL_SUCCESS) {
                converged = true;
                break;
            }
            // Best objective stalled over the window: relative change below tolerance.
            const double f = s->fval;
            best.push_back(f);
            if (best.size() > window) {
                const double before = best[best.size() - 1 - window];
                if (before - f <= kObjectiveTolerance * std::max(f, 1e-20 * f_ref)) {
                    converged = true;
                    break;
                }
            }
        }
        for (size_t i = 0; i < dim; ++i) u[i] = gsl_vector_get(s->x, i);
        if (!converged && round == 1) {
            gsl_multimin_fminimizer_free(s);
            gsl_vector_free(x);
            gsl_vector_free(ss);
            throw FitError("simplex did not converge within " + std::to_string(kIterationCap) + " iterations");
        }
    }
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(x);
    gsl_vector_free(ss);
    out.nl = t.from_u(u.data(), dim);
    return out;
}

Problem make_problem(const SampledCurve &s, const FitContext &ctx, bool counts) {
    Problem p;
    p.ctx = ctx;
    p.x = s.x;
    p.y = s.y;
    p.counts = counts;
    p.w.resize(s.y.size());
    for (size_t i = 0; i < s.y.size(); ++i) {
        if (s.y_err) {
            p.w[i] = 1.0 / ((*s.y_err)[i] * (*s.y_err)[i]);
        } else {
            p.w[i] = counts ? 1.0 / std::max(s.y[i], 1.0) : 1.0;
        }
    }
    const size_t n = s.x.size();
    p.edge_lo.resize(n);
    p.edge_hi.resize(n);
    for (size_t i = 0; i < n; ++i) {
        p.edge_lo[i] = i == 0 ? s.x[0] - 0.5 * (s.x[1] - s.x[0]) : 0.5 * (s.x[i - 1] + s.x[i]);
        p.edge_hi[i] = i + 1 == n ? s.x[n - 1] + 0.5 * (s.x[n - 1] - s.x[n - 2]) : 0.5 * (s.x[i] + s.x[i + 1]);
    }
    return p;
}

Transform make_transform(const Problem &p) {
    Transform t{p.ctx.model};
    if (p.ctx.model == Model::lorentzian) {
        t.center_ref = p.x[static_cast<size_t>(std::max_element(p.y.begin(), p.y.end()) - p.y.begin())];
        t.center_scale = (p.x.back() - p.x.front()) / 10.0;
    }
    return t;
}

std::vector<std::string> reported_names(Model m) {
    switch (m) {
    case Model::lorentzian:
        return {"center_ghz", "fwhm_ghz", "area", "offset"};
    case Model::single_exp:
        return {"lifetime_ps", "amplitude", "offset"};
    case Model::biexp:
        break;
    }
    return {"fast_lifetime_ps", "slow_lifetime_ps", "fast_amplitude", "slow_amplitude", "offset"};
}

std::vector<std::string> units(Model m) {
    switch (m) {
    case Model::lorentzian:
        return {"GHz", "GHz", "y*GHz", "y"};
    case Model::single_exp:
        return {"ps", "counts", "counts/bin"};
    case Model::biexp:
        break;
    }
    return {"ps", "ps", "counts", "counts", "counts/bin"};
}

// Full internal vector: nonlinear parameters followed by linear coefficients.
std::vector<double> internal_values(const FitResult &fr) {
    const auto names = reported_names(fr.context.model);
    std::vector<double> v;
    for (const auto &n : names) v.push_back(fr.value(n));
    return v;
}

Eigen::MatrixXd jacobian(const Problem &p, const std::vector<double> &full) {
    const int nn = p.n_nonlinear();
    const int nl_count = p.n_linear();
    const auto n = static_cast<Eigen::Index>(p.x.size());
    std::vector<double> nl(full.begin(), full.begin() + nn);
    std::vector<double> coef(full.begin() + nn, full.end());
    Eigen::MatrixXd j(n, nn + nl_count);
    Columns cols;
    p.columns(nl, cols);
    for (int c = 0; c < nl_count; ++c) {
        for (Eigen::Index i = 0; i < n; ++i) j(i, nn + c) = cols[static_cast<size_t>(c)][static_cast<size_t>(i)];
    }
    for (int k = 0; k < nn; ++k) {
        double scale = std::abs(nl[static_cast<size_t>(k)]);
        if (p.ctx.model == Model::lorentzian && k == 0) scale = std::max(nl[1], 1e-6);
        const double h = 1e-6 * std::max(scale, 1e-12);
        Columns up, down;
        std::vector<double> a = nl, b = nl;
        a[static_cast<size_t>(k)] += h;
        b[static_cast<size_t>(k)] -= h;
        p.columns(a, up);
        p.columns(b, down);
        for (Eigen::Index i = 0; i < n; ++i) {
            double d = 0.0;
            for (int c = 0; c < nl_count; ++c) {
                d += coef[static_cast<size_t>(c)] *
                     (up[static_cast<size_t>(c)][static_cast<size_t>(i)] - down[static_cast<size_t>(c)][static_cast<size_t>(i)]);
            }
            j(i, k) = d / (2.0 * h);
        }
    }
    return j;
}

Eigen::MatrixXd covariance(const Problem &p, const std::vector<double> &full, double reduced_chi2) {
    const Eigen::MatrixXd j = jacobian(p, full);
    const auto n = j.rows();
    Eigen::MatrixXd jw = j;
    for (Eigen::Index i = 0; i < n; ++i) jw.row(i) *= p.w[static_cast<size_t>(i)];
    const Eigen::MatrixXd info = j.transpose() * jw;
    // Scale-free singularity test on the correlation-normalised curvature.
    const Eigen::VectorXd d = info.diagonal().cwiseMax(0.0).cwiseSqrt();
    const auto m = info.rows();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(m, m, 0.0);
    std::vector<bool> bad(static_cast<size_t>(m), false);
    Eigen::VectorXd inv_d(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        bad[static_cast<size_t>(k)] = !(d(k) > 0.0);
        inv_d(k) = bad[static_cast<size_t>(k)] ? 0.0 : 1.0 / d(k);
    }
    const Eigen::MatrixXd corr = inv_d.asDiagonal() * info * inv_d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
    const Eigen::VectorXd ev = es.eigenvalues();
    const Eigen::MatrixXd vecs = es.eigenvectors();
    Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        if (ev(k) > 1e-12) {
            inv += vecs.col(k) * vecs.col(k).transpose() / ev(k);
        } else {
            for (Eigen::Index r = 0; r < m; ++r) {
                if (std::abs(vecs(r, k)) > 1e-6) bad[static_cast<size_t>(r)] = true;
            }
        }
    }
    cov = inv_d.asDiagonal() * inv * inv_d.asDiagonal() * reduced_chi2;
    for (Eigen::Index k = 0; k < m; ++k) {
        if (bad[static_cast<size_t>(k)]) {
            cov.row(k).setConstant(std::numeric_limits<double>::quiet_NaN());
            cov.col(k).setConstant(std::numeric_limits<double>::quiet_NaN());
            cov(k, k) = std::numeric_limits<double>::infinity();
        }
    }
    return cov;
}

double sigma_from(const Eigen::MatrixXd &cov, Eigen::Index k) {
    const double v = cov(k, k);
    if (std::isinf(v)) return std::numeric_limits<double>::infinity();
    return std::sqrt(std::max(v, 0.0));
}

FitResult assemble(const Problem &p, const std::vector<double> &nl_in, int iterations) {
    std::vector<double> nl = nl_in;
    Columns cols;
    p.columns(nl, cols);
    LinearSolution lin = solve_linear(p, cols);
    bool vanished = false;
    if (p.ctx.model == Model::biexp) {
        if (nl[0] > nl[1]) {
            std::swap(nl[0], nl[1]);
            std::swap(lin.coef[0], lin.coef[1]);
        }
        // A component below round-off share is absent; keep the survivor as the fast one.
        const double total = lin.coef[0] + lin.coef[1];
        vanished = std::min(lin.coef[0], lin.coef[1]) <= kVanishingShare * total;
        if (vanished && lin.coef[0] < lin.coef[1]) {
            std::swap(nl[0], nl[1]);
            std::swap(lin.coef[0], lin.coef[1]);
        }
    }
    FitResult fr;
    fr.context = p.ctx;
    fr.iterations = iterations;
    const int dof = std::max<int>(1, static_cast<int>(p.x.size()) - p.n_nonlinear() - p.n_linear());
    fr.reduced_chi2 = lin.chi2 / dof;

    std::vector<double> full = nl;
    full.insert(full.end(), lin.coef.begin(), lin.coef.end());
    const auto names = reported_names(p.ctx.model);
    const auto u = units(p.ctx.model);
    const Eigen::MatrixXd cov = covariance(p, full, fr.reduced_chi2);
    for (size_t k = 0; k < names.size(); ++k) {
        fr.params.push_back({names[k], u[k], full[k], sigma_from(cov, static_cast<Eigen::Index>(k))});
    }
    if (p.ctx.model == Model::biexp) {
        const double af = full[2];
        const double as = full[3];
        const double sum = af + as;
        Parameter frac{"slow_fraction", "", sum > 0.0 ? as / sum : 0.0, std::numeric_limits<double>::infinity()};
        if (sum > 0.0 && std::isfinite(cov(2, 2)) && std::isfinite(cov(3, 3))) {
            // d f / d af = -as/sum^2, d f / d as = af/sum^2
            const double gf = -as / (sum * sum);
            const double gs = af / (sum * sum);
            const double var = gf * gf * cov(2, 2) + gs * gs * cov(3, 3) + 2.0 * gf * gs * cov(2, 3);
            frac.sigma = std::sqrt(std::max(var, 0.0));
        }
        fr.params.push_back(frac);
        fr.degenerate = vanished || std::abs(nl[1] - nl[0]) < 1e-3 * std::min(nl[0], nl[1]);
    }
    return fr;
}

// Log-linear regression on the tail after the peak; returns the decay time.
double tail_lifetime(const Problem &p) {
    const auto peak = static_cast<size_t>(std::max_element(p.y.begin(), p.y.end()) - p.y.begin());
    const double ymax = p.y[peak];
    const double base = *std::min_element(p.y.begin(), p.y.end());
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = peak; i < p.y.size(); ++i) {
        const double v = p.y[i] - base;
        if (v <= std::max(5.0, 1e-3 * ymax)) continue;
        if (p.y[i] > 0.8 * ymax) continue;
        const double w = v;
        const double ly = std::log(v);
        sw += w;
        sx += w * p.x[i];
        sy += w * ly;
        sxx += w * p.x[i] * p.x[i];
        sxy += w * p.x[i] * ly;
    }
    const double den = sw * sxx - sx * sx;
    if (sw <= 0.0 || den <= 0.0) return (p.x.back() - p.x.front()) / 5.0;
    const double slope = (sw * sxy - sx * sy) / den;
    if (!(slope < 0.0)) return (p.x.back() - p.x.front()) / 5.0;
    return -1.0 / slope;
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    return g;
}

std::vector<double> decay_start(const Problem &p) {
    const double span = p.x.back() - p.x.front();
    const double bin = (p.x.back() - p.x.front()) / static_cast<double>(p.x.size() - 1);
    const double lo = std::max(0.5 * bin, 1.0);
    const double hi = 20.0 * span;
    const double tail = tail_lifetime(p);
    if (p.ctx.model == Model::single_exp) {
        auto grid = log_grid(lo, hi, 120);
        grid.push_back(tail);
        double best = std::numeric_limits<double>::infinity();
        double arg = tail;
        for (double t : grid) {
            const double f = objective(p, {t});
            if (f < best) {
                best = f;
                arg = t;
            }
        }
        return {arg};
    }
    auto grid = log_grid(lo, hi, 48);
    std::vector<std::vector<double>> candidates;
    for (double fast : grid) {
        candidates.push_back({fast, tail});
        for (double slow : grid) {
            if (slow > 1.5 * fast) candidates.push_back({fast, slow});
        }
    }
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> arg = candidates.front();
    for (const auto &c : candidates) {
        const double f = objective(p, c);
        if (f < best) {
            best = f;
            arg = c;
        }
    }
    return arg;
}

std::vector<double> lorentz_start(const Problem &p) {
    const auto peak = static_cast<size_t>(std::max_element(p.y.begin(), p.y.end()) - p.y.begin());
    const double base = *std::min_element(p.y.begin(), p.y.end());
    const double half = base + 0.5 * (p.y[peak] - base);
    double left = p.x.front();
    for (size_t i = peak; i > 0; --i) {
        if (p.y[i - 1] <= half) {
            left = p.x[i - 1] + (half - p.y[i - 1]) * (p.x[i] - p.x[i - 1]) / (p.y[i] - p.y[i - 1]);
            break;
        }
    }
    double right = p.x.back();
    for (size_t i = peak; i + 1 < p.y.size(); ++i) {
        if (p.y[i + 1] <= half) {
            right = p.x[i] + (p.y[i] - half) * (p.x[i + 1] - p.x[i]) / (p.y[i] - p.y[i + 1]);
            break;
        }
    }
    double width = right - left;
    if (p.ctx.instrument == InstrumentShape::lorentzian) width -= p.ctx.instrument_fwhm_ghz;
    if (!(width > 0.0)) width = 0.5 * (right - left);
    return {p.x[peak], width};
}

void check_variance(const SampledCurve &s) {
    const auto [lo, hi] = std::minmax_element(s.y.begin(), s.y.end());
    if (!(*hi > *lo)) throw FitError("degenerate data: y has zero variance");
}

FitResult fit_problem(const Problem &p, const std::vector<double> &start) {
    const Transform t = make_transform(p);
    const SimplexResult r = run_simplex(p, t, start, p.ctx.model == Model::lorentzian ? 0.2 : 0.1);
    return assemble(p, r.nl, r.iterations);
}

} // namespace

std::string to_string(Model m) {
    switch (m) {
    case Model::lorentzian:
        return "lorentzian";
    case Model::single_exp:
        return "single_exp";
    case Model::biexp:
        break;
    }
    return "biexp";
}

Model parse_model(const std::string &s) {
    if (s == "lorentzian") return Model::lorentzian;
    if (s == "single_exp") return Model::single_exp;
    if (s == "biexp") return Model::biexp;
    throw ParameterError("model: expected 'lorentzian', 'single_exp' or 'biexp', got '" + s + "'");
}

InstrumentShape parse_instrument_shape(const std::string &s) {
    if (s == "lorentzian") return InstrumentShape::lorentzian;
    if (s == "gaussian") return InstrumentShape::gaussian;
    throw ParameterError("instrument: expected 'lorentzian' or 'gaussian', got '" + s + "'");
}

std::string to_string(InstrumentShape s) { return s == InstrumentShape::lorentzian ? "lorentzian" : "gaussian"; }

const Parameter &FitResult::at(const std::string &name) const {
    for (const auto &p : params) {
        if (p.name == name) return p;
    }
    throw std::out_of_range("fit result has no parameter '" + name + "'");
}

std::vector<std::string> internal_parameter_names(Model m) { return reported_names(m); }

FitResult fit_lorentzian(const SampledCurve &s, double instrument_fwhm, InstrumentShape instrument) {
    s.validate();
    if (s.x.size() < 5) throw FitError("lorentzian fit needs at least 5 points");
    if (!(instrument_fwhm >= 0.0)) throw ParameterError("instrument_fwhm_ghz: must be non-negative");
    check_variance(s);
    FitContext ctx;
    ctx.model = Model::lorentzian;
    ctx.instrument_fwhm_ghz = instrument_fwhm;
    ctx.instrument = instrument;
    const Problem p = make_problem(s, ctx, false);
    return fit_problem(p, lorentz_start(p));
}

FitResult fit_decay(const SampledCurve &s, Model model, const DetectorParams &d, double epoch_ps) {
    s.validate();
    d.validate("detector.");
    if (model == Model::lorentzian) throw ParameterError("model: decay fits take single_exp or biexp");
    if (s.x.size() < 10) throw FitError("decay fit needs at least 10 points");
    check_variance(s);
    FitContext ctx;
    ctx.model = model;
    ctx.detector = d;
    ctx.epoch_ps = epoch_ps;
    const Problem p = make_problem(s, ctx, true);
    return fit_problem(p, decay_start(p));
}

std::vector<double> uncertainty(const FitResult &fr, const SampledCurve &s) {
    const Problem p = make_problem(s, fr.context, fr.context.model != Model::lorentzian);
    const Eigen::MatrixXd cov = covariance(p, internal_values(fr), fr.reduced_chi2);
    std::vector<double> out;
    for (Eigen::Index k = 0; k < cov.rows(); ++k) out.push_back(sigma_from(cov, k));
    return out;
}

std::vector<double> bootstrap_uncertainty(const FitResult &fr, const SampledCurve &s, int n_resamples,
                                          std::uint64_t seed) {
    if (n_resamples < 2) throw ParameterError("n_resamples: need at least 2");
    const bool counts = fr.context.model != Model::lorentzian;
    const Problem base = make_problem(s, fr.context, counts);
    const std::vector<double> full = internal_values(fr);
    const int nn = base.n_nonlinear();
    const std::vector<double> nl(full.begin(), full.begin() + nn);
    Columns cols;
    base.columns(nl, cols);
    std::vector<double> model(s.y.size(), 0.0);
    for (size_t c = 0; c < cols.size(); ++c) {
        for (size_t i = 0; i < model.size(); ++i) model[i] += full[static_cast<size_t>(nn) + c] * cols[c][i];
    }
    const double resid_sigma = std::sqrt(fr.reduced_chi2);

    std::mt19937_64 rng(seed);
    const size_t m = full.size();
    std::vector<double> sum(m, 0.0), sum_sq(m, 0.0);
    for (int r = 0; r < n_resamples; ++r) {
        SampledCurve resampled = s;
        for (size_t i = 0; i < model.size(); ++i) {
            if (counts && !s.y_err) {
                resampled.y[i] = static_cast<double>(std::poisson_distribution<std::uint64_t>(std::max(model[i], 0.0))(rng));
            } else {
                const double sd = s.y_err ? (*s.y_err)[i] : resid_sigma;
                resampled.y[i] = model[i] + std::normal_distribution<double>(0.0, sd)(rng);
            }
        }
        Problem p = make_problem(resampled, fr.context, counts);
        // Weights follow the original data so every resample is fitted the same way.
        p.w = base.w;
        const FitResult refit = fit_problem(p, nl);
        const std::vector<double> v = internal_values(refit);
        for (size_t k = 0; k < m; ++k) {
            sum[k] += v[k];
            sum_sq[k] += v[k] * v[k];
        }
    }
    std::vector<double> out(m);
    const double n = n_resamples;
    for (size_t k = 0; k < m; ++k) {
        out[k] = std::sqrt(std::max(0.0, (sum_sq[k] - sum[k] * sum[k] / n) / (n - 1.0)));
    }
    return out;
}

} // namespace hom::fit
