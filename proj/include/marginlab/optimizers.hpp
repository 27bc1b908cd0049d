// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>

#include "marginlab/losses.hpp"
#include "marginlab/matrix.hpp"
#include "marginlab/norms.hpp"

namespace marginlab {

/// eta_t = eta0 / max(t, 1)^decay.
struct Schedule {
    double eta0 = 0.1;
    double decay = 0.5;

    void validate() const;
};

double eta(const Schedule& schedule, std::int64_t t);

/// Normalized steepest descent: W <- W - eta * lmo(grad).
struct Nsd {
    NormSpec spec;
};

/// Normalized momentum steepest descent on the EMA momentum
/// M <- beta1 M + (1 - beta1) grad. With use_newton_schulz and the spectral
/// norm the direction comes from Newton-Schulz instead of an SVD (Muon).
struct Nmd {
    NormSpec spec;
    double beta1 = 0.9;
    bool use_newton_schulz = false;
    int newton_schulz_steps = 8;
};

/// Adam without bias correction. epsilon = 0 is the stability-free variant.
struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.99;
    double epsilon = 0.0;
};

using AlgorithmKind = std::variant<Nsd, Nmd, Adam>;

void validate(const AlgorithmKind& kind);
std::string describe(const AlgorithmKind& kind);

/// Entry-wise bound |M| <= alpha sqrt(V) for Adam with beta1 <= beta2.
/// For beta1 = beta2 = 0, M / sqrt(V) = sign(grad) and alpha is 1.
double adam_alpha(double beta1, double beta2);

class OptimizerState {
public:
    OptimizerState(Matrix w0, AlgorithmKind kind, Schedule schedule);

    [[nodiscard]] const Matrix& weights() const noexcept { return w_; }
    [[nodiscard]] const AlgorithmKind& kind() const noexcept { return kind_; }
    [[nodiscard]] const Schedule& schedule() const noexcept { return schedule_; }
    [[nodiscard]] std::int64_t steps() const noexcept { return t_; }
    [[nodiscard]] bool converged() const noexcept { return converged_; }

    /// EMA momentum. Zero for NSD.
    [[nodiscard]] Matrix first_moment() const;
    /// Adam second moment. Zero for NSD and NMD.
    [[nodiscard]] Matrix second_moment() const;
    /// Entry-wise M / sqrt(V), evaluated in scaled form (0 where V = 0).
    [[nodiscard]] Matrix moment_ratio() const;

    friend void step_in_place(OptimizerState& state, const LossEval& eval);

private:
    Matrix w_;
    // Moments are stored as m_ * 2^exp_ and v_ * 2^(2 exp_) so that tiny
    // late-training gradients do not underflow when squared.
    Matrix m_;
    Matrix v_;
    int exp_ = 0;
    bool moments_initialized_ = false;
    std::int64_t t_ = 0;
    bool converged_ = false;
    AlgorithmKind kind_;
    Schedule schedule_;

    void accumulate_moments(const Matrix& grad, double beta1, double beta2, bool second);
};

/// One update from the gradient in eval (taken at state.weights()). A zero
/// gradient (NSD) or momentum (NMD) leaves the state unchanged and sets the
/// converged flag.
void step_in_place(OptimizerState& state, const LossEval& eval);
OptimizerState step(OptimizerState state, const LossEval& eval);

/// Which steps emit a record: every step up to dense_until, then about
/// per_decade log-spaced steps per decade. The final step is always logged.
struct Cadence {
    std::int64_t dense_until = 100;
    int per_decade = 20;
    bool every_step = false;

    [[nodiscard]] bool should_log(std::int64_t t) const;
    static Cadence every() { return {0, 0, true}; }
};

struct StepInfo {
    std::int64_t t;  // steps completed
    double eta;      // rate used by step t
    const OptimizerState& state;
    const LossEval& eval;  // evaluation the step consumed (at W_{t-1})
    bool final;
};

using StepHook = std::function<void(const StepInfo&)>;

/// Runs `steps` updates, calling hook at the cadence. Stops early if the
/// state reports convergence (the last step is then reported as final).
OptimizerState run(Matrix init_w, const AlgorithmKind& kind, const Schedule& schedule, const Dataset& data,
                   LossKind loss, std::int64_t steps, const Cadence& cadence, const StepHook& hook);

}  // namespace marginlab
