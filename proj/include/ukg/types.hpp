#pragma once
// Core data model: weighted triples, vocabulary, fact index, dataset split.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ukg {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

// A relation fact key (h, r, t).
struct Triple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;

    bool operator==(const Triple&) const = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const noexcept {
        std::uint64_t x = (std::uint64_t(t.head) << 32) | t.tail;
        x ^= std::uint64_t(t.relation) * 0x9e3779b97f4a7c15ull;
        x ^= x >> 33;
        x *= 0xff51afd7ed558ccdull;
        x ^= x >> 33;
        return std::size_t(x);
    }
};

// A fact together with its confidence score. Scores are raw until
// normalize_scores has run; afterwards they lie in [0, 1].
struct WeightedTriple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;
    double score = 0.0;

    Triple key() const { return Triple{head, relation, tail}; }
};

// Thrown on malformed input text; line is 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Thrown when data violates a documented precondition.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// 64-bit FNV-1a, used for vocabulary and file digests.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);

// Bidirectional name <-> dense-id maps for entities and relations.
// Ids are contiguous from 0 in first-sight order.
class Vocabulary {
public:
    EntityId add_entity(const std::string& name);
    RelationId add_relation(const std::string& name);

    std::optional<EntityId> entity_id(const std::string& name) const;
    std::optional<RelationId> relation_id(const std::string& name) const;

    const std::string& entity_name(EntityId id) const;
    const std::string& relation_name(RelationId id) const;

    std::size_t entity_count() const { return entity_names_.size(); }
    std::size_t relation_count() const { return relation_names_.size(); }

    const std::vector<std::string>& entity_names() const { return entity_names_; }
    const std::vector<std::string>& relation_names() const { return relation_names_; }

    // Order-sensitive digests over the name lists.
    std::uint64_t entity_hash() const;
    std::uint64_t relation_hash() const;

private:
    std::unordered_map<std::string, EntityId> entity_ids_;
    std::unordered_map<std::string, RelationId> relation_ids_;
    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
};

// Lookup structures over a fixed fact set. Immutable after construction,
// safe to share across concurrent readers.
//
// Strong facts are those with score strictly above tau.
class FactIndex {
public:
    using TailScore = std::pair<EntityId, double>;
    using HeadScore = std::pair<EntityId, double>;

    struct StrongFact {
        EntityId head;
        EntityId tail;
        double score;
    };

    FactIndex() = default;
    FactIndex(const std::vector<WeightedTriple>& facts, double tau);

    bool contains(const Triple& t) const { return exact_.count(t) > 0; }

    // by-head-relation: every observed (t, s) for the pair (h, r), or nullptr.
    const std::vector<TailScore>* tails(EntityId h, RelationId r) const;

    // strong-by-relation: all strong (h, t, s) under r.
    const std::vector<StrongFact>& strong_facts(RelationId r) const;

    // Strong adjacency in both orientations, for rule grounding.
    const std::vector<TailScore>* strong_tails(EntityId h, RelationId r) const;
    const std::vector<HeadScore>* strong_heads(RelationId r, EntityId t) const;

    double tau() const { return tau_; }
    std::size_t size() const { return exact_.size(); }

private:
    static std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
        return (std::uint64_t(a) << 32) | b;
    }

    double tau_ = 0.0;
    std::unordered_set<Triple, TripleHash> exact_;
    std::unordered_map<std::uint64_t, std::vector<TailScore>> by_head_rel_;
    std::unordered_map<RelationId, std::vector<StrongFact>> strong_by_rel_;
    std::unordered_map<std::uint64_t, std::vector<TailScore>> strong_by_head_rel_;
    std::unordered_map<std::uint64_t, std::vector<HeadScore>> strong_by_rel_tail_;
};

// Train/validation/test partition plus score-0 negatives for the test set.
struct DatasetSplit {
    std::vector<WeightedTriple> train;
    std::vector<WeightedTriple> validation;
    std::vector<WeightedTriple> test;
    std::vector<WeightedTriple> test_negatives;  // score fixed at 0
};

}  // namespace ukg
