#include "ukg/synth.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "ukg/psl.hpp"
#include "ukg/rng.hpp"

namespace ukg {

void SynthConfig::validate() const {
    if (entities < 2) throw ValidationError("synth needs at least 2 entities");
    if (relations < 1) throw ValidationError("synth needs at least 1 relation");
    if (latent_dim < 1) throw ValidationError("latent-dim must be >= 1");
    if (facts < 1) throw ValidationError("facts must be >= 1");
    const double capacity = double(entities) * double(entities) * double(relations);
    if (double(facts) > capacity / 2.0)
        throw ValidationError("facts must stay below half of all possible triples");
    if (transitive_relation >= 0 && std::size_t(transitive_relation) >= relations)
        throw ValidationError("transitive-relation is not a valid relation id");
    if (!(min_body_value >= 0.0 && min_body_value <= 1.0))
        throw ValidationError("min-body-value must lie in [0, 1]");
}

namespace {

// One closure round; returns how many facts were added or raised.
std::size_t close_transitive(std::vector<WeightedTriple>& facts, RelationId rel,
                             double min_body_value, std::vector<Triple>& implied,
                             std::unordered_set<Triple, TripleHash>& implied_seen) {
    std::unordered_map<EntityId, std::vector<std::pair<EntityId, double>>> succ;
    std::unordered_map<Triple, std::size_t, TripleHash> where;
    for (std::size_t i = 0; i < facts.size(); ++i) {
        const auto& f = facts[i];
        where.emplace(f.key(), i);
        if (f.relation == rel) succ[f.head].emplace_back(f.tail, f.score);
    }

    // Collect the strongest implied score per triple before mutating.
    std::vector<std::pair<Triple, double>> candidates;
    std::unordered_map<Triple, std::size_t, TripleHash> cand_at;
    for (const auto& f : facts) {
        if (f.relation != rel) continue;
        auto it = succ.find(f.tail);
        if (it == succ.end()) continue;
        for (const auto& [c, s2] : it->second) {
            const double body = luk_and(f.score, s2);
            if (body < min_body_value) continue;
            const Triple t{f.head, rel, c};
            auto [pos, fresh] = cand_at.try_emplace(t, candidates.size());
            if (fresh)
                candidates.emplace_back(t, body);
            else
                candidates[pos->second].second = std::max(candidates[pos->second].second, body);
        }
    }

    std::size_t changed = 0;
    for (const auto& [t, body] : candidates) {
        auto it = where.find(t);
        if (it == where.end()) {
            facts.push_back({t.head, t.relation, t.tail, body});
            ++changed;
        } else if (facts[it->second].score < body) {
            facts[it->second].score = body;
            ++changed;
        } else {
            continue;
        }
        if (implied_seen.insert(t).second) implied.push_back(t);
    }
    return changed;
}

}  // namespace

SynthResult generate_synthetic(const SynthConfig& config) {
    config.validate();

    SynthResult result;
    for (std::size_t e = 0; e < config.entities; ++e)
        result.vocab.add_entity("e" + std::to_string(e));
    for (std::size_t r = 0; r < config.relations; ++r)
        result.vocab.add_relation("r" + std::to_string(r));

    result.latent = ModelParams::init(config.entities, config.relations, config.latent_dim,
                                      config.variant, config.seed);
    result.latent.map_weight = config.map_weight;
    result.latent.map_bias = config.map_bias;
    result.latent.entity_vocab_hash = result.vocab.entity_hash();
    result.latent.relation_vocab_hash = result.vocab.relation_hash();

    Rng rng(config.seed ^ 0xd1b54a32d192ed03ull);
    std::unordered_set<Triple, TripleHash> seen;
    result.triples.reserve(config.facts);
    while (result.triples.size() < config.facts) {
        Triple t;
        t.head = EntityId(uniform_index(rng, config.entities));
        t.relation = RelationId(uniform_index(rng, config.relations));
        t.tail = EntityId(uniform_index(rng, config.entities));
        if (!seen.insert(t).second) continue;
        result.triples.push_back({t.head, t.relation, t.tail, confidence(result.latent, t)});
    }

    if (config.transitive_relation >= 0) {
        std::unordered_set<Triple, TripleHash> implied_seen;
        for (std::size_t round = 0; round < config.closure_rounds; ++round)
            if (close_transitive(result.triples, RelationId(config.transitive_relation),
                                 config.min_body_value, result.implied, implied_seen) == 0)
                break;
    }
    return result;
}

}  // namespace ukg
