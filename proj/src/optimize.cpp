#include "dirtensor/optimize.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multifit_nlinear.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace dirtensor {

namespace {

// GSL aborts on error by default; status codes are checked instead.
void gsl_errors_off() {
    static std::once_flag once;
    std::call_once(once, [] { gsl_set_error_handler_off(); });
}

std::vector<double> to_vec(const gsl_vector* v) {
    std::vector<double> out(v->size);
    for (std::size_t i = 0; i < v->size; ++i) out[i] = gsl_vector_get(v, i);
    return out;
}

struct NmCtx {
    const std::function<double(const std::vector<double>&)>* f;
    std::size_t evals = 0;
    std::vector<double> buf;
};

double nm_trampoline(const gsl_vector* x, void* params) {
    auto* ctx = static_cast<NmCtx*>(params);
    for (std::size_t i = 0; i < x->size; ++i) ctx->buf[i] = gsl_vector_get(x, i);
    ++ctx->evals;
    const double v = (*ctx->f)(ctx->buf);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
}

struct LmCtx {
    const std::function<void(const std::vector<double>&, std::vector<double>&)>* r;
    std::size_t evals = 0;
    std::vector<double> xb, rb;
};

int lm_trampoline(const gsl_vector* x, void* params, gsl_vector* f) {
    auto* ctx = static_cast<LmCtx*>(params);
    for (std::size_t i = 0; i < x->size; ++i) ctx->xb[i] = gsl_vector_get(x, i);
    ++ctx->evals;
    (*ctx->r)(ctx->xb, ctx->rb);
    gsl_vector_set_zero(f);
    for (std::size_t i = 0; i < ctx->rb.size(); ++i) {
        if (!std::isfinite(ctx->rb[i])) return GSL_EDOM;
        gsl_vector_set(f, i, ctx->rb[i]);
    }
    return GSL_SUCCESS;
}

}  // namespace

MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x0, double initial_step, std::size_t max_iter,
                           double size_tol) {
    const std::size_t n = x0.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: empty parameter vector");
    gsl_errors_off();
    NmCtx ctx{&f, 0, std::vector<double>(n)};
    gsl_multimin_function fn{&nm_trampoline, n, &ctx};

    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(n), gsl_vector_free);
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> step(gsl_vector_alloc(n), gsl_vector_free);
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, x0[i]);
    gsl_vector_set_all(step.get(), initial_step);
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), gsl_multimin_fminimizer_free);
    gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get());

    MinimizeResult out;
    for (std::size_t it = 0; it < max_iter; ++it) {
        if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), size_tol) == GSL_SUCCESS) {
            out.converged = true;
            break;
        }
    }
    out.x = to_vec(gsl_multimin_fminimizer_x(s.get()));
    out.value = gsl_multimin_fminimizer_minimum(s.get());
    out.evaluations = ctx.evals;
    return out;
}

MinimizeResult levenberg_marquardt(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& residual,
    std::size_t n_residuals, std::vector<double> x0, std::size_t max_iter) {
    const std::size_t p = x0.size();
    if (p == 0 || n_residuals == 0) throw std::invalid_argument("levenberg_marquardt: empty problem");
    gsl_errors_off();
    LmCtx ctx{&residual, 0, std::vector<double>(p), std::vector<double>(n_residuals)};
    // The trust-region workspace needs n >= p; extra residuals are zero.
    const std::size_t n = std::max(n_residuals, p);
    gsl_multifit_nlinear_fdf fdf{};
    fdf.f = &lm_trampoline;
    fdf.df = nullptr;  // finite-difference Jacobian
    fdf.fvv = nullptr;
    fdf.n = n;
    fdf.p = p;
    fdf.params = &ctx;

    gsl_multifit_nlinear_parameters params = gsl_multifit_nlinear_default_parameters();
    params.trs = gsl_multifit_nlinear_trs_lm;
    params.solver = gsl_multifit_nlinear_solver_svd;  // rank-deficient Jacobians are the norm here
    std::unique_ptr<gsl_multifit_nlinear_workspace, decltype(&gsl_multifit_nlinear_free)> w(
        gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &params, n, p),
        gsl_multifit_nlinear_free);
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(p), gsl_vector_free);
    if (!w) throw std::runtime_error("levenberg_marquardt: workspace allocation failed");
    for (std::size_t i = 0; i < p; ++i) gsl_vector_set(x.get(), i, x0[i]);

    MinimizeResult out;
    if (gsl_multifit_nlinear_init(x.get(), &fdf, w.get()) != GSL_SUCCESS) {
        out.x = std::move(x0);
        out.value = std::numeric_limits<double>::infinity();
        return out;
    }
    int info = 0;
    const int status = gsl_multifit_nlinear_driver(max_iter, 1e-14, 1e-14, 1e-15, nullptr, nullptr,
                                                   &info, w.get());
    out.converged = status == GSL_SUCCESS;
    out.x = to_vec(gsl_multifit_nlinear_position(w.get()));
    const gsl_vector* f = gsl_multifit_nlinear_residual(w.get());
    double ss = 0.0;
    for (std::size_t i = 0; i < f->size; ++i) ss += gsl_vector_get(f, i) * gsl_vector_get(f, i);
    out.value = ss;
    out.evaluations = ctx.evals;
    return out;
}

}  // namespace dirtensor
