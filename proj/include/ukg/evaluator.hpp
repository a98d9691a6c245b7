#pragma once
// Task metrics: confidence prediction (MSE/MAE), tail ranking (mean nDCG
// under linear or exponential gain), and strong-fact classification
// (F1 / accuracy) through a one-feature logistic regression.

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "ukg/model.hpp"
#include "ukg/types.hpp"

namespace ukg {

enum class Gain { Linear, Exponential };

const char* gain_name(Gain g);

// One ranking task: score every entity as a tail for (head, relation, ?).
// relevance maps tail ids to ground-truth confidence scores; absent tails
// count as relevance 0.
struct RankQuery {
    EntityId head = 0;
    RelationId relation = 0;
    std::unordered_map<EntityId, double> relevance;
};

struct ConfidenceMetrics {
    double mse = 0.0;
    double mae = 0.0;
    std::size_t count = 0;
};

// Mean squared / absolute error of model confidence against observed
// scores; when include_negatives is set the negatives enter at target 0.
ConfidenceMetrics confidence_metrics(const ModelParams& model,
                                     std::span<const WeightedTriple> test,
                                     std::span<const Triple> test_negatives,
                                     bool include_negatives);

// nDCG for one query, ranking all entity ids below entity_count by model
// confidence (ties broken by ascending id). Linear gain r or exponential
// gain 2^r - 1, discount log2(rank + 1). Returns nullopt when the ideal
// DCG is zero (no positive-relevance tail).
std::optional<double> ndcg(const RankQuery& query, const ModelParams& model, Gain gain,
                           std::size_t entity_count);

struct MeanNdcg {
    double value = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;  // zero-ideal-DCG queries, excluded from the mean
};

// Mean over scorable queries; throws ValidationError when every query is
// skipped.
MeanNdcg mean_ndcg(const ModelParams& model, std::span<const RankQuery> queries, Gain gain,
                   std::size_t entity_count);

// One query per distinct (head, relation) in the test split, in first-seen
// order. With whole_kg_relevance the relevance pool covers observed facts
// from all three splits; otherwise test facts only.
std::vector<RankQuery> build_rank_queries(const DatasetSplit& split,
                                          bool whole_kg_relevance = true);

struct LabeledTriple {
    Triple triple;
    bool strong = false;
};

struct ScoredLabel {
    double score = 0.0;
    bool strong = false;
};

// Downstream classifier data. Train points: validation facts labeled by
// score > tau plus an equal number of sampled negatives labeled false.
// Test points: test facts labeled by score > tau plus the split's test
// negatives labeled false. Negative sampling rejects against all observed
// facts and is deterministic in seed.
struct ClassificationData {
    std::vector<LabeledTriple> train;
    std::vector<LabeledTriple> test;
};

ClassificationData build_classification_data(const DatasetSplit& split, double tau,
                                             std::size_t entity_count, std::uint64_t seed);

std::vector<ScoredLabel> score_labeled(const ModelParams& model,
                                       std::span<const LabeledTriple> points);

struct Classification {
    double f1 = 0.0;        // on the strong class
    double accuracy = 0.0;
    double slope = 0.0;     // fitted logistic coefficients
    double intercept = 0.0;
    std::size_t test_count = 0;
};

// Fits p(strong | score) = sigmoid(slope * score + intercept) on the train
// points by Newton iteration (tolerance 1e-8, capped iterations), then
// reports strong-class F1 and accuracy on the test points predicting at
// p >= 0.5. Throws ValidationError when train points hold a single class.
Classification classify_strong(std::span<const ScoredLabel> train_points,
                               std::span<const ScoredLabel> test_points);

struct EvalOptions {
    bool confidence_task = true;
    bool ranking_task = true;
    bool classification_task = true;
    bool whole_kg_relevance = true;
    double tau = 0.85;
    std::uint64_t classifier_seed = 7;  // negative sampling for classifier training data
};

struct EvalReport {
    std::optional<ConfidenceMetrics> confidence_all;       // test plus negatives at target 0
    std::optional<ConfidenceMetrics> confidence_observed;  // test facts only
    std::optional<MeanNdcg> ndcg_linear;
    std::optional<MeanNdcg> ndcg_exp;
    std::optional<Classification> classification;
};

// Runs the selected tasks over the split's test portion.
EvalReport evaluate(const ModelParams& model, const DatasetSplit& split, const EvalOptions& opts);

}  // namespace ukg
