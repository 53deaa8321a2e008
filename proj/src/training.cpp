#include "grnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <type_traits>

#include "grnn/codesign.hpp"

namespace grnn {

TrainConfig TrainConfig::grnn_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::gcnn_defaults() {
    TrainConfig c;
    c.lr = 0.01;
    c.schedule = Schedule::step_decay;
    c.weight_decay = 0.0;
    return c;
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw ParameterError("TrainConfig: batch_size must be positive");
    if (validation_every == 0) throw ParameterError("TrainConfig: validation_every must be positive");
    if (validation_size == 0) throw ParameterError("TrainConfig: validation_size must be positive");
    if (schedule == Schedule::step_decay && decay_every == 0) throw ParameterError("TrainConfig: decay_every must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
        throw ParameterError("TrainConfig: betas must lie in (0, 1)");
    if (lr < 0.0 || weight_decay < 0.0 || l1_weight < 0.0 || epsilon <= 0.0)
        throw ParameterError("TrainConfig: negative rate or weight");
    if (gradient_clip && !(*gradient_clip > 0.0)) throw ParameterError("TrainConfig: gradient_clip must be positive");
}

std::string to_string(Schedule s) { return s == Schedule::cosine ? "cosine" : "step"; }

Schedule schedule_from_string(const std::string& name) {
    if (name == "cosine") return Schedule::cosine;
    if (name == "step") return Schedule::step_decay;
    throw ParameterError("unknown schedule '" + name + "'");
}

std::string to_string(ProxScaling s) { return s == ProxScaling::adam ? "adam" : "plain"; }

ProxScaling prox_scaling_from_string(const std::string& name) {
    if (name == "adam") return ProxScaling::adam;
    if (name == "plain") return ProxScaling::plain;
    throw ParameterError("unknown prox scaling '" + name + "'");
}

double lr_at(std::size_t batch, const TrainConfig& config) {
    if (config.schedule == Schedule::cosine) {
        if (config.total_batches == 0) return config.lr;
        const double frac = static_cast<double>(batch) / static_cast<double>(config.total_batches);
        return config.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
    }
    return config.lr * std::pow(config.decay_factor, static_cast<double>(batch / config.decay_every));
}

std::vector<Matrix> sample_initial_conditions(const LqrProblem& prob, std::size_t count, Rng& rng) {
    const std::size_t n = prob.sys.nodes();
    const std::size_t p = prob.sys.state_dim();
    std::vector<Matrix> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(rng.normal_matrix(n, p));
    return out;
}

EvaluationSet make_evaluation_set(const LqrProblem& prob, std::size_t count, Rng& rng) {
    EvaluationSet set;
    set.x0 = sample_initial_conditions(prob, count, rng);
    LinearGainPolicy lqr(centralized_gain(prob.sys.a, prob.sys.b, prob.p_mat, prob.r_mat), prob.sys.nodes());
    set.lqr_costs.reserve(count);
    for (const auto& x0 : set.x0) set.lqr_costs.push_back(trajectory_cost(rollout(prob.sys, lqr, x0, prob.horizon), prob));
    return set;
}

namespace {

Matrix symmetric_part_times_two(const Matrix& m) { return m + transpose(m); }

// Plant and cost pieces shared by both controller unrollers.
struct PlantModel {
    const LqrProblem& prob;
    Matrix qq;  // Q + Q^T
    Matrix rr;
    Matrix pp;

    explicit PlantModel(const LqrProblem& p)
        : prob(p), qq(symmetric_part_times_two(p.q_mat)), rr(symmetric_part_times_two(p.r_mat)),
          pp(symmetric_part_times_two(p.p_mat)) {}

    [[nodiscard]] std::size_t horizon() const { return prob.horizon; }
    [[nodiscard]] std::size_t nodes() const { return prob.sys.nodes(); }
    [[nodiscard]] std::size_t state_dim() const { return prob.sys.state_dim(); }
    [[nodiscard]] std::size_t input_dim() const { return prob.sys.input_dim(); }

    // next = A x + B u; throws DivergedError if non-finite.
    void step(Matrix& next, const Matrix& x, const Matrix& u, std::size_t t, std::vector<double>& scratch) const {
        matvec_into(next.values(), prob.sys.a, x.values());
        scratch.resize(prob.sys.b.rows());
        matvec_into(scratch, prob.sys.b, u.values());
        auto nv = next.values();
        for (std::size_t i = 0; i < nv.size(); ++i) nv[i] += scratch[i];
        if (!all_finite(next)) throw DivergedError("closed-loop rollout diverged at step " + std::to_string(t), t);
    }
};

void check_plant(const PlantModel& plant, std::size_t nodes, std::size_t state_dim, std::size_t input_dim) {
    if (plant.nodes() != nodes || plant.state_dim() != state_dim || plant.input_dim() != input_dim)
        throw DimensionError("controller dimensions do not match the plant");
}

class GrnnUnroller {
public:
    GrnnUnroller(const GrnnParams& params, const LqrProblem& prob) : params_(params), plant_(prob) {
        if (params.mask && !params.mask->admits(params.s))
            throw InvariantError("GRNN shift operator has support outside its mask");
        check_plant(plant_, params.nodes(), params.state_dim(), params.input_dim());
        const std::size_t n = params.nodes(), h = params.hidden_dim(), horizon = plant_.horizon();
        x_.assign(horizon + 1, Matrix(n, params.state_dim()));
        z_.assign(horizon + 1, Matrix(n, h));
        zw_.assign(horizon, Matrix(n, h));
        d_.assign(horizon, Matrix(n, h));
        u_.assign(horizon, Matrix(n, params.input_dim()));
        pre_ = Matrix(n, h);
    }

    double forward(const Matrix& x0) {
        const std::size_t horizon = plant_.horizon();
        x_[0] = x0;
        double cost = 0.0;
        for (std::size_t t = 0; t < horizon; ++t) {
            multiply_into(zw_[t], z_[t], params_.w);
            multiply_into(pre_, x_[t], params_.f);
            multiply_add(pre_, params_.s, zw_[t]);
            activate(params_.activation, pre_, z_[t + 1], d_[t]);
            multiply_into(u_[t], z_[t + 1], params_.g);
            cost += quadratic_form(plant_.prob.q_mat, x_[t].values());
            cost += quadratic_form(plant_.prob.r_mat, u_[t].values());
            plant_.step(x_[t + 1], x_[t], u_[t], t, scratch_);
        }
        cost += quadratic_form(plant_.prob.p_mat, x_[horizon].values());
        return cost;
    }

    // Accumulates d(cost)/d(params) of the last forward pass into grads
    // (order: S if trained, F, W, G).
    void backward(std::vector<Matrix>& grads) {
        const std::size_t horizon = plant_.horizon();
        const std::size_t n = params_.nodes(), h = params_.hidden_dim();
        const bool train_s = params_.train_s;
        Matrix* gs = train_s ? &grads[0] : nullptr;
        Matrix& gf = grads[train_s ? 1 : 0];
        Matrix& gw = grads[train_s ? 2 : 1];
        Matrix& gg = grads[train_s ? 3 : 2];

        std::vector<double> gx(x_[0].size()), gx_next(x_[0].size());
        matvec_into(gx, plant_.pp, x_[horizon].values());
        Matrix gz_carry(n, h), gz(n, h), gpre(n, h), m(n, h);
        Matrix gu(n, params_.input_dim());
        Matrix gx_ctrl(n, params_.state_dim());

        for (std::size_t t = horizon; t-- > 0;) {
            // u(t) feeds the plant and the running cost.
            gu.set_zero();
            matvec_t_add(gu.values(), plant_.prob.sys.b, gx);
            {
                std::vector<double>& tmp = scratch_;
                tmp.resize(gu.size());
                matvec_into(tmp, plant_.rr, u_[t].values());
                auto gv = gu.values();
                for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += tmp[i];
            }

            gz = gz_carry;
            multiply_a_bt_add(gz, gu, params_.g);
            multiply_at_b_add(gg, z_[t + 1], gu);

            gpre = gz;
            {
                auto gp = gpre.values();
                const auto dv = d_[t].values();
                for (std::size_t i = 0; i < gp.size(); ++i) gp[i] *= dv[i];
            }

            multiply_at_b_add(gf, x_[t], gpre);
            if (gs) multiply_a_bt_add(*gs, gpre, zw_[t]);
            m.set_zero();
            multiply_at_b_add(m, params_.s, gpre);
            multiply_at_b_add(gw, z_[t], m);
            gz_carry.set_zero();
            multiply_a_bt_add(gz_carry, m, params_.w);

            // x(t) feeds the plant, the running cost, and the controller input.
            std::fill(gx_next.begin(), gx_next.end(), 0.0);
            matvec_t_add(gx_next, plant_.prob.sys.a, gx);
            scratch_.resize(gx_next.size());
            matvec_into(scratch_, plant_.qq, x_[t].values());
            gx_ctrl.set_zero();
            multiply_a_bt_add(gx_ctrl, gpre, params_.f);
            const auto gc = gx_ctrl.values();
            for (std::size_t i = 0; i < gx_next.size(); ++i) gx_next[i] += scratch_[i] + gc[i];
            gx.swap(gx_next);
        }
    }

private:
    const GrnnParams& params_;
    PlantModel plant_;
    std::vector<Matrix> x_, z_, zw_, d_, u_;
    Matrix pre_;
    std::vector<double> scratch_;
};

class GcnnUnroller {
public:
    GcnnUnroller(const GcnnParams& params, const LqrProblem& prob) : params_(params), plant_(prob) {
        validate(params, prob.sys.state_dim());
        check_plant(plant_, params.nodes(), plant_.state_dim(), params.layers.back().taps.front().cols());
        const std::size_t n = params.nodes(), horizon = plant_.horizon();
        x_.assign(horizon + 1, Matrix(n, plant_.state_dim()));
        u_.assign(horizon, Matrix(n, plant_.input_dim()));
        steps_.resize(horizon);
        for (auto& step : steps_) {
            step.layers.resize(params.layers.size());
            std::size_t width = plant_.state_dim();
            for (std::size_t l = 0; l < params.layers.size(); ++l) {
                const auto& taps = params.layers[l].taps;
                step.layers[l].shifted.assign(taps.size(), Matrix(n, width));
                width = taps.front().cols();
                step.layers[l].out = Matrix(n, width);
                step.layers[l].derivative = Matrix(n, width);
            }
        }
    }

    double forward(const Matrix& x0) {
        const std::size_t horizon = plant_.horizon();
        x_[0] = x0;
        double cost = 0.0;
        for (std::size_t t = 0; t < horizon; ++t) {
            const Matrix* input = &x_[t];
            for (std::size_t l = 0; l < params_.layers.size(); ++l) {
                auto& cache = steps_[t].layers[l];
                const auto& taps = params_.layers[l].taps;
                cache.shifted[0] = *input;
                for (std::size_t k = 1; k < taps.size(); ++k) multiply_into(cache.shifted[k], params_.s, cache.shifted[k - 1]);
                pre_.set_zero();
                if (pre_.rows() != cache.out.rows() || pre_.cols() != cache.out.cols()) pre_ = Matrix(cache.out.rows(), cache.out.cols());
                for (std::size_t k = 0; k < taps.size(); ++k) multiply_add(pre_, cache.shifted[k], taps[k]);
                const bool last = l + 1 == params_.layers.size();
                activate(last ? Activation::identity : params_.activation, pre_, cache.out, cache.derivative);
                input = &cache.out;
            }
            u_[t] = *input;
            cost += quadratic_form(plant_.prob.q_mat, x_[t].values());
            cost += quadratic_form(plant_.prob.r_mat, u_[t].values());
            plant_.step(x_[t + 1], x_[t], u_[t], t, scratch_);
        }
        cost += quadratic_form(plant_.prob.p_mat, x_[horizon].values());
        return cost;
    }

    void backward(std::vector<Matrix>& grads) {
        const std::size_t horizon = plant_.horizon();
        const std::size_t n = params_.nodes();
        std::vector<double> gx(x_[0].size()), gx_next(x_[0].size());
        matvec_into(gx, plant_.pp, x_[horizon].values());
        Matrix gu(n, plant_.input_dim());

        for (std::size_t t = horizon; t-- > 0;) {
            gu.set_zero();
            matvec_t_add(gu.values(), plant_.prob.sys.b, gx);
            scratch_.resize(gu.size());
            matvec_into(scratch_, plant_.rr, u_[t].values());
            {
                auto gv = gu.values();
                for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += scratch_[i];
            }

            Matrix g = gu;
            std::size_t grad_index = 0;
            for (std::size_t l = 0; l < params_.layers.size(); ++l) grad_index += params_.layers[l].taps.size();
            for (std::size_t l = params_.layers.size(); l-- > 0;) {
                const auto& cache = steps_[t].layers[l];
                const auto& taps = params_.layers[l].taps;
                grad_index -= taps.size();
                auto gp = g.values();
                const auto dv = cache.derivative.values();
                for (std::size_t i = 0; i < gp.size(); ++i) gp[i] *= dv[i];
                for (std::size_t k = 0; k < taps.size(); ++k) multiply_at_b_add(grads[grad_index + k], cache.shifted[k], g);
                // d/d input of sum_k S^k X H_k, by Horner in S^T.
                const std::size_t width = cache.shifted[0].cols();
                Matrix acc(n, width), tmp(n, width);
                for (std::size_t k = taps.size(); k-- > 0;) {
                    if (k + 1 < taps.size()) {
                        tmp.set_zero();
                        multiply_at_b_add(tmp, params_.s, acc);
                        acc = tmp;
                    }
                    multiply_a_bt_add(acc, g, taps[k]);
                }
                g = std::move(acc);
            }

            std::fill(gx_next.begin(), gx_next.end(), 0.0);
            matvec_t_add(gx_next, plant_.prob.sys.a, gx);
            scratch_.resize(gx_next.size());
            matvec_into(scratch_, plant_.qq, x_[t].values());
            const auto gc = g.values();
            for (std::size_t i = 0; i < gx_next.size(); ++i) gx_next[i] += scratch_[i] + gc[i];
            gx.swap(gx_next);
        }
    }

private:
    struct LayerCache {
        std::vector<Matrix> shifted;  // S^k X_{l-1}
        Matrix out;
        Matrix derivative;
    };
    struct StepCache {
        std::vector<LayerCache> layers;
    };

    const GcnnParams& params_;
    PlantModel plant_;
    std::vector<Matrix> x_, u_;
    std::vector<StepCache> steps_;
    Matrix pre_;
    std::vector<double> scratch_;
};

template <class Unroller, class Params>
std::vector<double> costs_of(const Params& params, const LqrProblem& prob, std::span<const Matrix> x0) {
    Unroller unroller(params, prob);
    std::vector<double> out;
    out.reserve(x0.size());
    for (const auto& x : x0) out.push_back(unroller.forward(x));
    return out;
}

template <class Unroller, class Params>
LossGradient gradients_of(const Params& params, const LqrProblem& prob, std::span<const Matrix> x0_batch) {
    if (x0_batch.empty()) throw ParameterError("loss_gradients: empty batch");
    Unroller unroller(params, prob);
    LossGradient out;
    for (const Matrix* p : trainable_parameters(params)) out.grads.emplace_back(p->rows(), p->cols());
    for (const auto& x : x0_batch) {
        out.loss += unroller.forward(x);
        unroller.backward(out.grads);
    }
    const double scale = 1.0 / static_cast<double>(x0_batch.size());
    out.loss *= scale;
    for (auto& g : out.grads) g *= scale;
    return out;
}

double mean(const std::vector<double>& v) {
    if (v.empty()) throw ParameterError("closed_loop_loss: empty batch");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> closed_loop_costs(const GrnnParams& params, const LqrProblem& prob, std::span<const Matrix> x0) {
    return costs_of<GrnnUnroller>(params, prob, x0);
}

std::vector<double> closed_loop_costs(const GcnnParams& params, const LqrProblem& prob, std::span<const Matrix> x0) {
    return costs_of<GcnnUnroller>(params, prob, x0);
}

double closed_loop_loss(const GrnnParams& params, const LqrProblem& prob, std::span<const Matrix> x0_batch) {
    return mean(closed_loop_costs(params, prob, x0_batch));
}

double closed_loop_loss(const GcnnParams& params, const LqrProblem& prob, std::span<const Matrix> x0_batch) {
    return mean(closed_loop_costs(params, prob, x0_batch));
}

std::vector<Matrix*> trainable_parameters(GrnnParams& params) {
    std::vector<Matrix*> out;
    if (params.train_s) out.push_back(&params.s);
    out.insert(out.end(), {&params.f, &params.w, &params.g});
    return out;
}

std::vector<Matrix*> trainable_parameters(GcnnParams& params) {
    std::vector<Matrix*> out;
    for (auto& layer : params.layers)
        for (auto& h : layer.taps) out.push_back(&h);
    return out;
}

std::vector<const Matrix*> trainable_parameters(const GrnnParams& params) {
    auto mut = trainable_parameters(const_cast<GrnnParams&>(params));
    return {mut.begin(), mut.end()};
}

std::vector<const Matrix*> trainable_parameters(const GcnnParams& params) {
    auto mut = trainable_parameters(const_cast<GcnnParams&>(params));
    return {mut.begin(), mut.end()};
}

LossGradient loss_gradients(const GrnnParams& params, const LqrProblem& prob, std::span<const Matrix> x0_batch) {
    auto out = gradients_of<GrnnUnroller>(params, prob, x0_batch);
    if (params.train_s && params.mask) params.mask->apply(out.grads[0]);
    return out;
}

LossGradient loss_gradients(const GcnnParams& params, const LqrProblem& prob, std::span<const Matrix> x0_batch) {
    return gradients_of<GcnnUnroller>(params, prob, x0_batch);
}

AdamState make_adam_state(std::span<Matrix* const> params) {
    AdamState state;
    for (const Matrix* p : params) {
        state.m.emplace_back(p->rows(), p->cols());
        state.v.emplace_back(p->rows(), p->cols());
    }
    return state;
}

void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<const Matrix> grads, double lr,
               const TrainConfig& config) {
    if (params.size() != grads.size() || state.m.size() != params.size())
        throw DimensionError("adam_step: parameter, gradient and state counts differ");

    double clip_scale = 1.0;
    if (config.gradient_clip) {
        double sq = 0.0;
        for (const auto& g : grads) sq += dot(g, g);
        const double norm = std::sqrt(sq);
        if (norm > *config.gradient_clip) clip_scale = *config.gradient_clip / norm;
    }

    ++state.step;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    const double decay = 1.0 - lr * config.weight_decay;

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i]->values();
        const auto g = grads[i].values();
        auto m = state.m[i].values();
        auto v = state.v[i].values();
        if (g.size() != p.size()) throw DimensionError("adam_step: gradient shape mismatch");
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = clip_scale * g[j];
            m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * gj;
            v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * gj * gj;
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            p[j] = p[j] * decay - lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ParameterError("quantile: no values");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<CurveQuartiles> aggregate_curves(std::span<const LearningCurve> curves) {
    std::vector<CurveQuartiles> out;
    if (curves.empty()) return out;
    const std::size_t points = curves.front().samples.size();
    for (const auto& c : curves)
        if (c.samples.size() != points) throw DimensionError("aggregate_curves: curves sampled at different batches");
    for (std::size_t i = 0; i < points; ++i) {
        std::vector<double> values;
        for (const auto& c : curves) values.push_back(c.samples[i].cost);
        out.push_back({curves.front().samples[i].batch, quantile(values, 0.25), quantile(values, 0.5),
                       quantile(values, 0.75)});
    }
    return out;
}

namespace {

// Proximal l1 step on the shift operator after each update. With adam scaling the
// threshold of entry ij is lr * lambda / (sqrt(v_hat_ij) + eps), i.e. the prox in
// the same diagonal metric that ADAM used for the gradient step.
void shrink_shift(GrnnParams& params, const AdamState& adam, double lr, const TrainConfig& config) {
    if (config.l1_weight <= 0.0 || !params.train_s) return;
    const double tau = lr * config.l1_weight;
    if (config.prox_scaling == ProxScaling::plain) {
        params.s = prox_l1(params.s, tau);
        return;
    }
    // S is the first trainable parameter whenever it is trained.
    const auto v = adam.v.front().values();
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam.step));
    Matrix taus(params.s.rows(), params.s.cols());
    auto t = taus.values();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = tau / (std::sqrt(v[i] / bc2) + config.epsilon);
    params.s = prox_l1(params.s, taus);
}

template <class Params>
TrainResult<Params> train_impl(const LqrProblem& prob, Params params, const TrainConfig& config,
                               const EvaluationSet& validation, Rng& rng) {
    config.validate();
    TrainResult<Params> result{std::move(params), {}, {}};
    Params& p = result.params;
    auto trainables = trainable_parameters(p);
    AdamState adam = make_adam_state(trainables);

    auto record = [&](std::size_t batch) {
        try {
            result.curve.samples.push_back({batch, evaluate_normalized(p, prob, validation)});
        } catch (const DivergedError& e) {
            throw TrainingAborted(std::string("validation rollout diverged: ") + e.what(), "train", batch,
                                  result.loss_history);
        }
    };

    for (std::size_t batch = 0; batch < config.total_batches; ++batch) {
        if (batch % config.validation_every == 0) record(batch);
        const auto x0 = sample_initial_conditions(prob, config.batch_size, rng);
        LossGradient lg;
        try {
            lg = loss_gradients(p, prob, x0);
        } catch (const DivergedError& e) {
            throw TrainingAborted(std::string("training rollout diverged: ") + e.what(), "train", batch,
                                  result.loss_history);
        }
        result.loss_history.push_back(lg.loss);
        if (!std::isfinite(lg.loss)) throw TrainingAborted("non-finite training loss", "train", batch, result.loss_history);

        const double lr = lr_at(batch, config);
        adam_step(adam, trainables, lg.grads, lr, config);
        if constexpr (std::is_same_v<Params, GrnnParams>) {
            if (p.mask) p.mask->apply(p.s);
            shrink_shift(p, adam, lr, config);
        }
    }
    record(config.total_batches);
    return result;
}

}  // namespace

TrainResult<GrnnParams> train(const LqrProblem& prob, GrnnParams params, const TrainConfig& config,
                              const EvaluationSet& validation, Rng& rng) {
    return train_impl(prob, std::move(params), config, validation, rng);
}

TrainResult<GcnnParams> train(const LqrProblem& prob, GcnnParams params, const TrainConfig& config,
                              const EvaluationSet& validation, Rng& rng) {
    if (config.l1_weight > 0.0) throw ParameterError("train: l1 regularization applies to GRNN shift operators only");
    return train_impl(prob, std::move(params), config, validation, rng);
}

}  // namespace grnn
