#include "ukg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ukg {

const char* ablation_name(Ablation a) {
    switch (a) {
        case Ablation::Full: return "full";
        case Ablation::NoNegatives: return "no-negatives";
        case Ablation::NoPsl: return "no-psl";
    }
    return "full";
}

Ablation ablation_from_string(const std::string& name) {
    if (name == "full") return Ablation::Full;
    if (name == "no-negatives") return Ablation::NoNegatives;
    if (name == "no-psl") return Ablation::NoPsl;
    throw ValidationError("unknown ablation '" + name +
                          "' (expected full, no-negatives or no-psl)");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning-rate must be > 0");
    if (dimension < 1) throw ValidationError("dimension must be >= 1");
    if (batch_size < 1) throw ValidationError("batch-size must be >= 1");
    if (!(l2_lambda >= 0.0)) throw ValidationError("l2-lambda must be >= 0");
    if (negatives_per_positive < 1) throw ValidationError("negatives-per-positive must be >= 1");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0))
        throw ValidationError("adam-beta1 must lie in (0, 1)");
    if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0))
        throw ValidationError("adam-beta2 must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
    if (max_epochs < 1) throw ValidationError("max-epochs must be >= 1");
    if (eval_every < 1) throw ValidationError("eval-every must be >= 1");
    if (patience < 1) throw ValidationError("patience must be >= 1");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]");
}

Gradients Gradients::zeros_like(const ModelParams& params) {
    Gradients g;
    g.entities.assign(params.entities.size(), 0.0);
    g.relations.assign(params.relations.size(), 0.0);
    return g;
}

OptimizerState OptimizerState::zeros_like(const ModelParams& params) {
    OptimizerState s;
    s.m_entities.assign(params.entities.size(), 0.0);
    s.v_entities.assign(params.entities.size(), 0.0);
    s.m_relations.assign(params.relations.size(), 0.0);
    s.v_relations.assign(params.relations.size(), 0.0);
    return s;
}

double loss_observed(const ModelParams& params, std::span<const WeightedTriple> batch) {
    double sum = 0.0;
    for (const auto& wt : batch) {
        double r = confidence(params, wt.key()) - wt.score;
        sum += r * r;
    }
    return sum;
}

double loss_unseen(const ModelParams& params, std::span<const Triple> negatives,
                   const Grounder* grounder) {
    double sum = 0.0;
    for (const auto& l : negatives) {
        double f = confidence(params, l);
        sum += f * f;  // negation prior: distance f, weight 1
        if (!grounder) continue;
        for (const auto& g : grounder->ground(l)) {
            double psi = g.weight * std::max(0.0, g.body_value - f);
            sum += psi * psi;
        }
    }
    return sum;
}

double l2_penalty(const ModelParams& params, double l2_lambda) {
    if (l2_lambda == 0.0) return 0.0;
    double sq = 0.0;
    for (double x : params.entities) sq += x * x;
    for (double x : params.relations) sq += x * x;
    return l2_lambda * sq;
}

double joint_loss(const ModelParams& params, std::span<const WeightedTriple> batch,
                  std::span<const Triple> negatives, const Grounder* grounder, double l2_lambda) {
    return loss_observed(params, batch) + loss_unseen(params, negatives, grounder) +
           l2_penalty(params, l2_lambda);
}

namespace {

// Adds coef_of_f(confidence) * d(confidence)/d(parameter) for one triple.
// The rectifier's saturated regions and exact kinks contribute zero.
template <typename CoefFn>
void accumulate_confidence_grad(const ModelParams& p, const Triple& t, CoefFn&& coef_of_f,
                                Gradients& out) {
    const std::size_t dim = p.dim;
    auto h = p.entity(t.head);
    auto tt = p.entity(t.tail);
    auto r = p.relation(t.relation);

    double g = 0.0;
    for (std::size_t i = 0; i < dim; ++i) g += r[i] * h[i] * tt[i];

    double f, df_dg, df_dw, df_db;
    if (p.variant == Variant::Logistic) {
        f = map_logistic(g, p.map_weight, p.map_bias);
        const double s = f * (1.0 - f);
        df_dg = s * p.map_weight;
        df_dw = s * g;
        df_db = s;
    } else {
        const double z = p.map_weight * g + p.map_bias;
        f = map_rectifier(g, p.map_weight, p.map_bias);
        const bool inside = z > 0.0 && z < 1.0;
        df_dg = inside ? p.map_weight : 0.0;
        df_dw = inside ? g : 0.0;
        df_db = inside ? 1.0 : 0.0;
    }

    const double coef = coef_of_f(f);
    const double dg = coef * df_dg;
    double* gh = out.entities.data() + std::size_t(t.head) * dim;
    double* gt = out.entities.data() + std::size_t(t.tail) * dim;
    double* gr = out.relations.data() + std::size_t(t.relation) * dim;
    for (std::size_t i = 0; i < dim; ++i) {
        gh[i] += dg * r[i] * tt[i];
        gt[i] += dg * r[i] * h[i];
        gr[i] += dg * h[i] * tt[i];
    }
    out.map_weight += coef * df_dw;
    out.map_bias += coef * df_db;
}

}  // namespace

Gradients gradients(const ModelParams& params, std::span<const WeightedTriple> batch,
                    std::span<const Triple> negatives, const Grounder* grounder,
                    double l2_lambda) {
    Gradients out = Gradients::zeros_like(params);

    for (const auto& wt : batch)
        accumulate_confidence_grad(
            params, wt.key(), [&](double f) { return 2.0 * (f - wt.score); }, out);

    for (const auto& l : negatives)
        accumulate_confidence_grad(
            params, l,
            [&](double f) {
                double coef = 2.0 * f;  // negation prior
                if (grounder)
                    for (const auto& g : grounder->ground(l)) {
                        const double d = g.body_value - f;
                        if (d > 0.0) coef -= 2.0 * g.weight * g.weight * d;
                    }
                return coef;
            },
            out);

    if (l2_lambda > 0.0) {
        for (std::size_t i = 0; i < params.entities.size(); ++i)
            out.entities[i] += 2.0 * l2_lambda * params.entities[i];
        for (std::size_t i = 0; i < params.relations.size(); ++i)
            out.relations[i] += 2.0 * l2_lambda * params.relations[i];
    }
    return out;
}

void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state, double lr,
               double beta1, double beta2, double epsilon) {
    if (grads.entities.size() != params.entities.size() ||
        grads.relations.size() != params.relations.size() ||
        state.m_entities.size() != params.entities.size() ||
        state.m_relations.size() != params.relations.size())
        throw ValidationError("optimizer shapes do not match the parameters");

    state.step += 1;
    const double c1 = 1.0 - std::pow(beta1, double(state.step));
    const double c2 = 1.0 - std::pow(beta2, double(state.step));

    auto update = [&](double& theta, double g, double& m, double& v) {
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g * g;
        theta -= lr * (m / c1) / (std::sqrt(v / c2) + epsilon);
    };

    for (std::size_t i = 0; i < params.entities.size(); ++i)
        update(params.entities[i], grads.entities[i], state.m_entities[i], state.v_entities[i]);
    for (std::size_t i = 0; i < params.relations.size(); ++i)
        update(params.relations[i], grads.relations[i], state.m_relations[i],
               state.v_relations[i]);
    update(params.map_weight, grads.map_weight, state.m_weight, state.v_weight);
    update(params.map_bias, grads.map_bias, state.m_bias, state.v_bias);
}

double validation_mse(const ModelParams& params, std::span<const WeightedTriple> validation) {
    if (validation.empty()) throw ValidationError("validation set is empty");
    double sum = 0.0;
    for (const auto& wt : validation) {
        double r = confidence(params, wt.key()) - wt.score;
        sum += r * r;
    }
    return sum / double(validation.size());
}

namespace {

void check_ids(const std::vector<WeightedTriple>& triples, const Vocabulary& vocab,
               const char* which) {
    for (const auto& wt : triples)
        if (wt.head >= vocab.entity_count() || wt.tail >= vocab.entity_count() ||
            wt.relation >= vocab.relation_count())
            throw ValidationError(std::string(which) +
                                  " split references ids outside the vocabulary");
}

}  // namespace

TrainResult train(const TrainConfig& config, const DatasetSplit& split,
                  const std::vector<LogicalRule>& rules, const Vocabulary& vocab,
                  const ModelParams* initial) {
    config.validate();
    if (split.train.empty()) throw ValidationError("training split is empty");
    check_ids(split.train, vocab, "train");
    check_ids(split.validation, vocab, "validation");

    ModelParams params;
    if (initial) {
        if (initial->dim != config.dimension || initial->variant != config.variant ||
            initial->entity_count() != vocab.entity_count() ||
            initial->relation_count() != vocab.relation_count())
            throw ValidationError("initial parameters do not match the config and vocabulary");
        params = *initial;
    } else {
        params = ModelParams::init(vocab.entity_count(), vocab.relation_count(), config.dimension,
                                   config.variant, config.seed);
    }
    params.entity_vocab_hash = vocab.entity_hash();
    params.relation_vocab_hash = vocab.relation_hash();

    const FactIndex index(split.train, config.tau);
    std::optional<Grounder> grounder_store;
    if (config.ablation == Ablation::Full) grounder_store.emplace(bind_rules(rules, vocab), index);
    const Grounder* grounder = grounder_store ? &*grounder_store : nullptr;

    OptimizerState state = OptimizerState::zeros_like(params);
    Rng rng(config.seed ^ 0x5851f42d4c957f2dull);  // decorrelate from the init stream

    TrainResult result;
    result.best = params;
    const bool has_validation = !split.validation.empty();
    double best_mse = std::numeric_limits<double>::infinity();
    std::size_t bad_evals = 0;

    std::vector<std::size_t> order(split.train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<WeightedTriple> batch;
    batch.reserve(std::min(config.batch_size, order.size()));

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_pos = 0.0;
        double epoch_neg = 0.0;

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(split.train[order[i]]);

            std::vector<Triple> negatives;
            if (config.ablation != Ablation::NoNegatives)
                negatives = sample_negatives(batch, config.negatives_per_positive, index,
                                             vocab.entity_count(), rng, &result.negative_stats);

            epoch_pos += loss_observed(params, batch);
            epoch_neg += loss_unseen(params, negatives, grounder);
            const Gradients grads = gradients(params, batch, negatives, grounder, config.l2_lambda);
            adam_step(params, grads, state, config.learning_rate, config.adam_beta1,
                      config.adam_beta2, config.epsilon);
        }
        result.epochs_run = epoch;

        if (epoch % config.eval_every != 0) continue;

        EvalRecord rec;
        rec.epoch = epoch;
        rec.j_pos = epoch_pos;
        rec.j_neg = epoch_neg;
        rec.reg = l2_penalty(params, config.l2_lambda);
        rec.train_loss = rec.j_pos + rec.j_neg + rec.reg;
        if (has_validation) {
            const double mse = validation_mse(params, split.validation);
            rec.val_mse = mse;
            if (mse < best_mse) {
                best_mse = mse;
                result.best = params;
                result.best_val_mse = mse;
                bad_evals = 0;
            } else {
                ++bad_evals;
            }
        }
        result.log.push_back(rec);
        if (has_validation && bad_evals >= config.patience) break;
    }

    // Without a validated snapshot (no validation split, or max-epochs below
    // eval-every) the final parameters are the only meaningful result.
    if (!result.best_val_mse) result.best = std::move(params);
    return result;
}

}  // namespace ukg
