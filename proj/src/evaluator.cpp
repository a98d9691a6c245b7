#include "ukg/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ukg/data.hpp"

namespace ukg {

const char* gain_name(Gain g) { return g == Gain::Linear ? "linear" : "exponential"; }

ConfidenceMetrics confidence_metrics(const ModelParams& model,
                                     std::span<const WeightedTriple> test,
                                     std::span<const Triple> test_negatives,
                                     bool include_negatives) {
    if (test.empty()) throw ValidationError("confidence evaluation needs a nonempty test set");
    double se = 0.0;
    double ae = 0.0;
    std::size_t n = 0;
    auto tally = [&](double predicted, double target) {
        const double e = predicted - target;
        se += e * e;
        ae += std::abs(e);
        ++n;
    };
    for (const auto& wt : test) tally(confidence(model, wt.key()), wt.score);
    if (include_negatives)
        for (const auto& t : test_negatives) tally(confidence(model, t), 0.0);
    return {se / double(n), ae / double(n), n};
}

namespace {

double gain_of(Gain gain, double rel) {
    return gain == Gain::Linear ? rel : std::exp2(rel) - 1.0;
}

double discount(std::size_t rank) {  // rank is 1-based
    return std::log2(double(rank) + 1.0);
}

}  // namespace

std::optional<double> ndcg(const RankQuery& query, const ModelParams& model, Gain gain,
                           std::size_t entity_count) {
    std::vector<double> rels;
    rels.reserve(query.relevance.size());
    for (const auto& [id, rel] : query.relevance) {
        if (id >= entity_count)
            throw ValidationError("relevance names an entity outside the vocabulary");
        if (!(rel >= 0.0 && rel <= 1.0))
            throw ValidationError("relevance score outside [0, 1]");
        rels.push_back(rel);
    }
    std::sort(rels.begin(), rels.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < rels.size(); ++i) idcg += gain_of(gain, rels[i]) / discount(i + 1);
    if (idcg <= 0.0) return std::nullopt;

    std::vector<std::pair<double, EntityId>> ranked;
    ranked.reserve(entity_count);
    for (std::size_t e = 0; e < entity_count; ++e)
        ranked.emplace_back(confidence(model, Triple{query.head, query.relation, EntityId(e)}),
                            EntityId(e));
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    double dcg = 0.0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        auto it = query.relevance.find(ranked[i].second);
        if (it != query.relevance.end()) dcg += gain_of(gain, it->second) / discount(i + 1);
    }
    return dcg / idcg;
}

MeanNdcg mean_ndcg(const ModelParams& model, std::span<const RankQuery> queries, Gain gain,
                   std::size_t entity_count) {
    MeanNdcg out;
    double sum = 0.0;
    for (const auto& q : queries) {
        auto v = ndcg(q, model, gain, entity_count);
        if (v) {
            sum += *v;
            ++out.evaluated;
        } else {
            ++out.skipped;
        }
    }
    if (out.evaluated == 0) throw ValidationError("no ranking query has a positive ideal DCG");
    out.value = sum / double(out.evaluated);
    return out;
}

std::vector<RankQuery> build_rank_queries(const DatasetSplit& split, bool whole_kg_relevance) {
    auto key = [](EntityId h, RelationId r) { return (std::uint64_t(h) << 32) | r; };
    std::unordered_map<std::uint64_t, std::unordered_map<EntityId, double>> pool;
    auto add = [&](const std::vector<WeightedTriple>& v) {
        for (const auto& wt : v) pool[key(wt.head, wt.relation)][wt.tail] = wt.score;
    };
    add(split.test);
    if (whole_kg_relevance) {
        add(split.train);
        add(split.validation);
    }

    std::vector<RankQuery> out;
    std::unordered_set<std::uint64_t> seen;
    for (const auto& wt : split.test) {
        if (!seen.insert(key(wt.head, wt.relation)).second) continue;
        RankQuery q;
        q.head = wt.head;
        q.relation = wt.relation;
        q.relevance = pool[key(wt.head, wt.relation)];
        out.push_back(std::move(q));
    }
    return out;
}

ClassificationData build_classification_data(const DatasetSplit& split, double tau,
                                             std::size_t entity_count, std::uint64_t seed) {
    ClassificationData data;
    for (const auto& wt : split.validation) data.train.push_back({wt.key(), wt.score > tau});
    if (!split.validation.empty()) {
        std::vector<WeightedTriple> all;
        all.reserve(split.train.size() + split.validation.size() + split.test.size());
        all.insert(all.end(), split.train.begin(), split.train.end());
        all.insert(all.end(), split.validation.begin(), split.validation.end());
        all.insert(all.end(), split.test.begin(), split.test.end());
        const FactIndex index(all, tau);
        Rng rng(seed);
        for (const auto& t : sample_negatives(split.validation, 1, index, entity_count, rng))
            data.train.push_back({t, false});
    }
    for (const auto& wt : split.test) data.test.push_back({wt.key(), wt.score > tau});
    for (const auto& wt : split.test_negatives) data.test.push_back({wt.key(), false});
    return data;
}

std::vector<ScoredLabel> score_labeled(const ModelParams& model,
                                       std::span<const LabeledTriple> points) {
    std::vector<ScoredLabel> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back({confidence(model, p.triple), p.strong});
    return out;
}

Classification classify_strong(std::span<const ScoredLabel> train_points,
                               std::span<const ScoredLabel> test_points) {
    if (train_points.empty()) throw ValidationError("classifier has no training points");
    bool any_strong = false;
    bool any_weak = false;
    for (const auto& p : train_points) (p.strong ? any_strong : any_weak) = true;
    if (!any_strong || !any_weak)
        throw ValidationError("classifier training data holds a single class");

    auto sigmoid = [](double z) { return map_logistic(z, 1.0, 0.0); };

    // Newton iterations on the log-likelihood of p = sigmoid(a*x + c).
    double a = 0.0;
    double c = 0.0;
    constexpr double tol = 1e-8;
    constexpr double ridge = 1e-9;  // keeps the Hessian invertible on degenerate data
    for (int iter = 0; iter < 200; ++iter) {
        double g0 = 0, g1 = 0, h00 = ridge, h01 = 0, h11 = ridge;
        for (const auto& pt : train_points) {
            const double p = sigmoid(a * pt.score + c);
            const double r = p - (pt.strong ? 1.0 : 0.0);
            const double w = p * (1.0 - p);
            g0 += r * pt.score;
            g1 += r;
            h00 += w * pt.score * pt.score;
            h01 += w * pt.score;
            h11 += w;
        }
        const double det = h00 * h11 - h01 * h01;
        if (!(std::abs(det) > 1e-30)) break;
        const double da = (h11 * g0 - h01 * g1) / det;
        const double dc = (h00 * g1 - h01 * g0) / det;
        a -= da;
        c -= dc;
        if (std::max(std::abs(da), std::abs(dc)) < tol) break;
    }

    Classification out;
    out.slope = a;
    out.intercept = c;
    out.test_count = test_points.size();

    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& pt : test_points) {
        const bool pred = sigmoid(a * pt.score + c) >= 0.5;
        if (pred && pt.strong)
            ++tp;
        else if (pred)
            ++fp;
        else if (pt.strong)
            ++fn;
        else
            ++tn;
    }
    const double precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double recall = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    out.f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    out.accuracy = test_points.empty() ? 0.0 : double(tp + tn) / double(test_points.size());
    return out;
}

EvalReport evaluate(const ModelParams& model, const DatasetSplit& split, const EvalOptions& opts) {
    EvalReport report;
    if (opts.confidence_task) {
        std::vector<Triple> negatives;
        negatives.reserve(split.test_negatives.size());
        for (const auto& wt : split.test_negatives) negatives.push_back(wt.key());
        report.confidence_all = confidence_metrics(model, split.test, negatives, true);
        report.confidence_observed = confidence_metrics(model, split.test, {}, false);
    }
    if (opts.ranking_task) {
        const auto queries = build_rank_queries(split, opts.whole_kg_relevance);
        report.ndcg_linear = mean_ndcg(model, queries, Gain::Linear, model.entity_count());
        report.ndcg_exp = mean_ndcg(model, queries, Gain::Exponential, model.entity_count());
    }
    if (opts.classification_task) {
        const auto data = build_classification_data(split, opts.tau, model.entity_count(),
                                                    opts.classifier_seed);
        const auto train_scores = score_labeled(model, data.train);
        const auto test_scores = score_labeled(model, data.test);
        report.classification = classify_strong(train_scores, test_scores);
    }
    return report;
}

}  // namespace ukg
