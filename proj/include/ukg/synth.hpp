#pragma once
// Synthetic uncertain-KG generator: scores come from a hidden random
// bilinear model, optionally made consistent with a transitive rule by
// soft-logic closure. Gives the toolchain self-contained corpora.

#include <cstdint>
#include <vector>

#include "ukg/model.hpp"
#include "ukg/types.hpp"

namespace ukg {

struct SynthConfig {
    std::size_t entities = 50;
    std::size_t relations = 4;
    std::size_t facts = 400;  // distinct base facts to sample
    std::size_t latent_dim = 8;
    Variant variant = Variant::Logistic;
    double map_weight = 4.0;  // sharpness of the hidden score map
    double map_bias = 0.0;
    std::uint64_t seed = 1;

    // When >= 0, this relation id is closed transitively: every strong
    // 2-step path (a,r,b),(b,r,c) forces score(a,r,c) >= its body value.
    int transitive_relation = -1;
    std::size_t closure_rounds = 2;
    double min_body_value = 0.5;  // paths below this add nothing

    void validate() const;
};

struct SynthResult {
    std::vector<WeightedTriple> triples;
    Vocabulary vocab;              // e0.., r0..
    ModelParams latent;            // the hidden generator model
    std::vector<Triple> implied;   // facts added or raised by closure
};

SynthResult generate_synthetic(const SynthConfig& config);

}  // namespace ukg
