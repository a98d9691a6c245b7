#pragma once
// Joint training: squared-error loss on observed facts, soft-logic distance
// loss on sampled unseen facts, L2 regularization, Adam updates, and early
// stopping on validation MSE.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ukg/data.hpp"
#include "ukg/model.hpp"
#include "ukg/psl.hpp"
#include "ukg/types.hpp"

namespace ukg {

enum class Ablation {
    Full,         // observed + unseen losses, rules grounded
    NoNegatives,  // observed loss only
    NoPsl,        // unseen loss keeps just the negation prior
};

const char* ablation_name(Ablation a);
Ablation ablation_from_string(const std::string& name);

struct TrainConfig {
    double learning_rate = 0.001;
    std::size_t dimension = 64;
    std::size_t batch_size = 128;
    double l2_lambda = 0.005;
    int negatives_per_positive = 2;
    Variant variant = Variant::Logistic;
    Ablation ablation = Ablation::Full;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.99;
    double epsilon = 1e-8;
    std::size_t max_epochs = 2000;
    std::size_t eval_every = 10;  // epochs between validation evaluations
    std::size_t patience = 5;     // consecutive non-improving evaluations allowed
    std::uint64_t seed = 1;

    // Strong-fact threshold for grounding rules against the train split.
    // Carried in dataset metadata, not a config-file key.
    double tau = 0.85;

    void validate() const;  // throws ValidationError on a bad field
};

// Dense parameter-shaped gradient buffers.
struct Gradients {
    std::vector<double> entities;
    std::vector<double> relations;
    double map_weight = 0.0;
    double map_bias = 0.0;

    static Gradients zeros_like(const ModelParams& params);
};

// Sum of squared residuals between model confidence and observed score.
double loss_observed(const ModelParams& params, std::span<const WeightedTriple> batch);

// Sum over negatives of squared weighted distances to satisfaction. Every
// negative carries the negation prior (distance = its confidence, weight 1);
// a non-null grounder adds each ground rule's hinge distance
// max(0, body - confidence) scaled by the rule weight.
double loss_unseen(const ModelParams& params, std::span<const Triple> negatives,
                   const Grounder* grounder);

// l2_lambda times the squared Frobenius norms of both embedding matrices.
// The scalar map parameters are not penalized.
double l2_penalty(const ModelParams& params, double l2_lambda);

double joint_loss(const ModelParams& params, std::span<const WeightedTriple> batch,
                  std::span<const Triple> negatives, const Grounder* grounder, double l2_lambda);

// Analytic gradient of joint_loss. Ground-rule body values are constants;
// gradients flow only through the head confidence. The rectifier variant
// uses subgradient 0 at its kinks, as does the hinge at distance 0.
Gradients gradients(const ModelParams& params, std::span<const WeightedTriple> batch,
                    std::span<const Triple> negatives, const Grounder* grounder, double l2_lambda);

struct OptimizerState {
    std::vector<double> m_entities, v_entities;
    std::vector<double> m_relations, v_relations;
    double m_weight = 0.0, v_weight = 0.0;
    double m_bias = 0.0, v_bias = 0.0;
    std::uint64_t step = 0;

    static OptimizerState zeros_like(const ModelParams& params);
};

// One Adam update with bias correction; increments state.step.
void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state, double lr,
               double beta1, double beta2, double epsilon);

// One training-log record, taken at each evaluation epoch. train_loss is
// j_pos + j_neg accumulated over the epoch's batches plus reg at epoch end.
struct EvalRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double j_pos = 0.0;
    double j_neg = 0.0;
    double reg = 0.0;
    std::optional<double> val_mse;  // absent when the validation split is empty
};

struct TrainResult {
    ModelParams best;  // best-validation snapshot; final epoch's params without validation
    std::vector<EvalRecord> log;
    std::size_t epochs_run = 0;
    std::optional<double> best_val_mse;
    NegativeSampleStats negative_stats;
};

// Mean squared residual over observed validation triples.
double validation_mse(const ModelParams& params, std::span<const WeightedTriple> validation);

// Full loop: per epoch, shuffle the train split, walk it in batches (last
// batch may be short), sample fresh negatives per batch, and apply Adam to
// the joint gradient. Every eval_every epochs the validation MSE is logged;
// training stops once it fails to improve for `patience` consecutive
// evaluations, returning the best snapshot. With an empty validation split
// the loop always runs max_epochs and returns the final parameters.
// A non-null `initial` resumes from those parameters (shape-checked against
// config and vocab) with a fresh optimizer. Single-threaded and
// bit-deterministic for a fixed config.
TrainResult train(const TrainConfig& config, const DatasetSplit& split,
                  const std::vector<LogicalRule>& rules, const Vocabulary& vocab,
                  const ModelParams* initial = nullptr);

}  // namespace ukg
