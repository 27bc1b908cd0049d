// SPDX-License-Identifier: Apache-2.0
#include "marginlab/optimizers.hpp"

#include <cmath>
#include <sstream>

#include "marginlab/error.hpp"
#include "marginlab/geometry.hpp"

namespace marginlab {

namespace {

void check_beta(double b, const char* name) {
    if (!(b >= 0.0 && b < 1.0)) throw Error(ErrorCode::invalid_argument, std::string(name) + " must lie in [0, 1)");
}

int binary_exponent(double x) {
    int e = 0;
    std::frexp(x, &e);
    return e;
}

void scale_pow2(Matrix& m, int e) {
    if (e == 0) return;
    for (double& x : m.values()) x = std::ldexp(x, e);
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void Schedule::validate() const {
    if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw Error(ErrorCode::invalid_argument, "eta0 must be positive");
    if (!(decay > 0.0 && decay <= 1.0)) throw Error(ErrorCode::invalid_argument, "schedule exponent must lie in (0, 1]");
}

double eta(const Schedule& schedule, std::int64_t t) {
    const double tt = t < 1 ? 1.0 : static_cast<double>(t);
    return schedule.eta0 / std::pow(tt, schedule.decay);
}

void validate(const AlgorithmKind& kind) {
    std::visit(overloaded{
                   [](const Nsd&) {},
                   [](const Nmd& k) {
                       check_beta(k.beta1, "beta1");
                       if (k.use_newton_schulz) {
                           if (!(k.spec == NormSpec::spectral()))
                               throw Error(ErrorCode::invalid_argument,
                                           "Newton-Schulz directions need the spectral norm (sinf)");
                           if (k.newton_schulz_steps < 1)
                               throw Error(ErrorCode::invalid_argument, "newton_schulz_steps must be >= 1");
                       }
                   },
                   [](const Adam& k) {
                       check_beta(k.beta1, "beta1");
                       check_beta(k.beta2, "beta2");
                       if (!(k.epsilon >= 0.0) || !std::isfinite(k.epsilon))
                           throw Error(ErrorCode::invalid_argument, "epsilon must be finite and >= 0");
                   },
               },
               kind);
}

std::string describe(const AlgorithmKind& kind) {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const Nsd& k) { os << "nsd(" << k.spec.name() << ")"; },
                   [&](const Nmd& k) {
                       os << "nmd(" << k.spec.name() << ", beta1=" << k.beta1;
                       if (k.use_newton_schulz) os << ", newton-schulz=" << k.newton_schulz_steps;
                       os << ")";
                   },
                   [&](const Adam& k) {
                       os << "adam(beta1=" << k.beta1 << ", beta2=" << k.beta2 << ", eps=" << k.epsilon << ")";
                   },
               },
               kind);
    return os.str();
}

double adam_alpha(double beta1, double beta2) {
    if (beta1 > beta2) throw Error(ErrorCode::invalid_argument, "the moment-ratio bound needs beta1 <= beta2");
    if (beta2 == 0.0) return 1.0;
    const double gap = beta2 - beta1 * beta1;
    return std::sqrt(beta2 * (1 - beta1) * (1 - beta1) / ((1 - beta2) * gap * gap));
}

OptimizerState::OptimizerState(Matrix w0, AlgorithmKind kind, Schedule schedule)
    : w_(std::move(w0)), kind_(std::move(kind)), schedule_(schedule) {
    if (w_.empty()) throw Error(ErrorCode::invalid_argument, "initial classifier is empty");
    if (!w_.all_finite()) throw Error(ErrorCode::invalid_argument, "initial classifier has non-finite entries");
    marginlab::validate(kind_);
    schedule_.validate();
    m_ = Matrix(w_.rows(), w_.cols());
    v_ = Matrix(w_.rows(), w_.cols());
}

Matrix OptimizerState::first_moment() const {
    Matrix m = m_;
    scale_pow2(m, exp_);
    return m;
}

Matrix OptimizerState::second_moment() const {
    Matrix v = v_;
    scale_pow2(v, 2 * exp_);
    return v;
}

Matrix OptimizerState::moment_ratio() const {
    Matrix r(m_.rows(), m_.cols());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double v = v_.values()[i];
        r.values()[i] = v > 0.0 ? m_.values()[i] / std::sqrt(v) : 0.0;
    }
    return r;
}

void OptimizerState::accumulate_moments(const Matrix& grad, double beta1, double beta2, bool second) {
    const double gmax = grad.max_abs();
    if (!moments_initialized_) {
        exp_ = gmax > 0.0 ? binary_exponent(gmax) : 0;
        moments_initialized_ = true;
    } else if (gmax > 0.0 && binary_exponent(gmax) > exp_) {
        const int shift = binary_exponent(gmax) - exp_;
        scale_pow2(m_, -shift);
        scale_pow2(v_, -2 * shift);
        exp_ += shift;
    }

    auto g = grad.values();
    auto m = m_.values();
    auto v = v_.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double gs = std::ldexp(g[i], -exp_);
        m[i] = beta1 * m[i] + (1 - beta1) * gs;
        if (second) v[i] = beta2 * v[i] + (1 - beta2) * gs * gs;
    }

    // Keep the stored moments near unit scale.
    double s = m_.max_abs();
    if (second) s = std::max(s, std::sqrt(v_.max_abs()));
    if (s > 0.0 && s < 0.0625) {
        const int shift = binary_exponent(s);
        scale_pow2(m_, -shift);
        scale_pow2(v_, -2 * shift);
        exp_ += shift;
    }
}

void step_in_place(OptimizerState& state, const LossEval& eval) {
    const Matrix& g = eval.gradient;
    if (!g.same_shape(state.w_)) throw Error(ErrorCode::dimension_mismatch, "gradient shape differs from W");
    if (!g.all_finite()) throw Error(ErrorCode::numerical_failure, "gradient has non-finite entries");
    const double rate = eta(state.schedule_, state.t_);

    std::visit(overloaded{
                   [&](const Nsd& k) {
                       if (g.is_zero()) {
                           state.converged_ = true;
                           return;
                       }
                       state.w_.add_scaled(lmo(g, k.spec), -rate);
                       ++state.t_;
                   },
                   [&](const Nmd& k) {
                       // The new momentum vanishes only if both the old one and g do.
                       if (g.is_zero() && state.m_.is_zero()) {
                           state.converged_ = true;
                           return;
                       }
                       state.accumulate_moments(g, k.beta1, 0.0, false);
                       const Matrix dir = k.use_newton_schulz
                                              ? newton_schulz_orthogonalize(state.m_, k.newton_schulz_steps)
                                              : lmo(state.m_, k.spec);
                       state.w_.add_scaled(dir, -rate);
                       ++state.t_;
                   },
                   [&](const Adam& k) {
                       const auto zero_v = [] {
                           throw Error(ErrorCode::degenerate_input,
                                       "Adam without a stability constant hit a zero second-moment entry; every "
                                       "initial gradient entry must be nonzero (grad[c,j]^2 >= omega > 0)");
                       };
                       // Checked before the moments change so the state survives the error.
                       if (k.epsilon == 0.0)
                           for (std::size_t i = 0; i < g.size(); ++i)
                               if (g.values()[i] == 0.0 && state.v_.values()[i] == 0.0) zero_v();
                       state.accumulate_moments(g, k.beta1, k.beta2, true);
                       const double eps = std::ldexp(k.epsilon, -state.exp_);
                       auto w = state.w_.values();
                       auto m = state.m_.values();
                       auto v = state.v_.values();
                       if (k.epsilon == 0.0)
                           for (double x : v)
                               if (x == 0.0) zero_v();
                       for (std::size_t i = 0; i < w.size(); ++i) w[i] -= rate * m[i] / (std::sqrt(v[i]) + eps);
                       ++state.t_;
                   },
               },
               state.kind_);
}

OptimizerState step(OptimizerState state, const LossEval& eval) {
    step_in_place(state, eval);
    return state;
}

bool Cadence::should_log(std::int64_t t) const {
    if (every_step || t <= dense_until) return true;
    if (per_decade <= 0) return false;
    const auto bin = [&](std::int64_t s) {
        return static_cast<std::int64_t>(std::floor(per_decade * std::log10(static_cast<double>(s)) + 1e-9));
    };
    return bin(t) > bin(t - 1);
}

OptimizerState run(Matrix init_w, const AlgorithmKind& kind, const Schedule& schedule, const Dataset& data,
                   LossKind loss, std::int64_t steps, const Cadence& cadence, const StepHook& hook) {
    if (steps < 1) throw Error(ErrorCode::invalid_argument, "steps must be >= 1");
    OptimizerState state(std::move(init_w), kind, schedule);
    std::int64_t last_logged = -1;
    for (std::int64_t i = 0; i < steps; ++i) {
        const LossEval ev = evaluate(loss, state.weights(), data);
        const double rate = eta(schedule, state.steps());
        step_in_place(state, ev);
        if (state.converged()) {
            if (hook && last_logged != state.steps())
                hook(StepInfo{state.steps(), rate, state, ev, true});
            break;
        }
        const bool final = i + 1 == steps;
        if (hook && (final || cadence.should_log(state.steps()))) {
            hook(StepInfo{state.steps(), rate, state, ev, final});
            last_logged = state.steps();
        }
    }
    return state;
}

}  // namespace marginlab
