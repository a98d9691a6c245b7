#pragma once
// Model parameters and embedding-based confidence scoring.
//
// Plausibility of (h, r, t) is the bilinear form sum_i r_i * h_i * t_i.
// Confidence maps plausibility into [0, 1] through either a logistic
// function or a bounded rectifier, with a learned scalar weight and bias.

#include <cstdint>
#include <span>
#include <vector>

#include "ukg/types.hpp"

namespace ukg {

enum class Variant { Logistic, Rectifier };

const char* variant_name(Variant v);
Variant variant_from_string(const std::string& name);

struct ModelParams {
    std::size_t dim = 0;
    Variant variant = Variant::Logistic;
    std::vector<double> entities;   // |E| x dim, row-major
    std::vector<double> relations;  // |R| x dim, row-major
    double map_weight = 1.0;
    double map_bias = 0.0;
    std::uint64_t entity_vocab_hash = 0;
    std::uint64_t relation_vocab_hash = 0;

    std::size_t entity_count() const { return dim ? entities.size() / dim : 0; }
    std::size_t relation_count() const { return dim ? relations.size() / dim : 0; }

    std::span<const double> entity(EntityId id) const;
    std::span<const double> relation(RelationId id) const;
    std::span<double> entity(EntityId id);
    std::span<double> relation(RelationId id);

    // Uniform init on [-6/sqrt(dim), +6/sqrt(dim)] per entry, w=1, b=0.
    static ModelParams init(std::size_t n_entities, std::size_t n_relations, std::size_t dim,
                            Variant variant, std::uint64_t seed);
};

// g(h, r, t) = sum_i r_i * h_i * t_i. Symmetric under h <-> t exchange.
double plausibility(const ModelParams& params, const Triple& t);

// 1 / (1 + exp(-(w*x + b))), computed in the saturation-safe form.
double map_logistic(double x, double w, double b);

// min(max(w*x + b, 0), 1).
double map_rectifier(double x, double w, double b);

// Variant's map applied to plausibility. Always within [0, 1]; the
// logistic variant stays strictly inside (0, 1).
double confidence(const ModelParams& params, const Triple& t);

std::vector<double> confidence_batch(const ModelParams& params, std::span<const Triple> triples);

}  // namespace ukg
