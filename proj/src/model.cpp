#include "ukg/model.hpp"

#include <cmath>

#include "ukg/rng.hpp"

namespace ukg {

const char* variant_name(Variant v) {
    return v == Variant::Logistic ? "logistic" : "rectifier";
}

Variant variant_from_string(const std::string& name) {
    if (name == "logistic") return Variant::Logistic;
    if (name == "rectifier") return Variant::Rectifier;
    throw ValidationError("unknown variant '" + name + "' (expected logistic or rectifier)");
}

std::span<const double> ModelParams::entity(EntityId id) const {
    if (std::size_t(id) >= entity_count()) throw std::out_of_range("entity id out of range");
    return {entities.data() + std::size_t(id) * dim, dim};
}

std::span<const double> ModelParams::relation(RelationId id) const {
    if (std::size_t(id) >= relation_count()) throw std::out_of_range("relation id out of range");
    return {relations.data() + std::size_t(id) * dim, dim};
}

std::span<double> ModelParams::entity(EntityId id) {
    if (std::size_t(id) >= entity_count()) throw std::out_of_range("entity id out of range");
    return {entities.data() + std::size_t(id) * dim, dim};
}

std::span<double> ModelParams::relation(RelationId id) {
    if (std::size_t(id) >= relation_count()) throw std::out_of_range("relation id out of range");
    return {relations.data() + std::size_t(id) * dim, dim};
}

ModelParams ModelParams::init(std::size_t n_entities, std::size_t n_relations, std::size_t dim,
                              Variant variant, std::uint64_t seed) {
    if (dim < 1) throw ValidationError("embedding dimension must be >= 1");
    ModelParams p;
    p.dim = dim;
    p.variant = variant;
    p.entities.resize(n_entities * dim);
    p.relations.resize(n_relations * dim);

    const double bound = 6.0 / std::sqrt(double(dim));
    Rng rng(seed);
    for (auto& x : p.entities) x = (2.0 * uniform_unit(rng) - 1.0) * bound;
    for (auto& x : p.relations) x = (2.0 * uniform_unit(rng) - 1.0) * bound;
    return p;
}

double plausibility(const ModelParams& params, const Triple& t) {
    auto h = params.entity(t.head);
    auto r = params.relation(t.relation);
    auto tl = params.entity(t.tail);
    double dot = 0.0;
    for (std::size_t i = 0; i < params.dim; ++i) dot += r[i] * h[i] * tl[i];
    return dot;
}

double map_logistic(double x, double w, double b) {
    const double z = w * x + b;
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double map_rectifier(double x, double w, double b) {
    const double z = w * x + b;
    if (z < 0.0) return 0.0;
    if (z > 1.0) return 1.0;
    return z;
}

double confidence(const ModelParams& params, const Triple& t) {
    const double g = plausibility(params, t);
    return params.variant == Variant::Logistic ? map_logistic(g, params.map_weight, params.map_bias)
                                               : map_rectifier(g, params.map_weight, params.map_bias);
}

std::vector<double> confidence_batch(const ModelParams& params, std::span<const Triple> triples) {
    std::vector<double> out;
    out.reserve(triples.size());
    for (const auto& t : triples) out.push_back(confidence(params, t));
    return out;
}

}  // namespace ukg
