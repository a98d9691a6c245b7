#pragma once
// Soft-logic reasoning: Lukasiewicz operators, logical rule templates,
// grounding against strong observed facts, and length-2 rule mining.

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ukg/types.hpp"

namespace ukg {

// Lukasiewicz t-norm operators over soft truth values in [0, 1].
// Inputs outside [0, 1] raise std::domain_error.
double luk_and(double a, double b);   // max(0, a + b - 1)
double luk_or(double a, double b);    // min(1, a + b)
double luk_neg(double a);             // 1 - a

// Truth value of the implication body -> head: min(1, 1 - body + head).
double rule_value(double body_value, double head_value);

// Distance to satisfaction, max(0, body - head). Zero iff head >= body.
double distance_to_satisfaction(double body_value, double head_value);

// Distance of the negation prior on an unseen fact: equals its confidence.
double prior_rule_distance(double head_confidence);

// One atom of a rule template; variables are capitalized identifiers.
struct AtomTemplate {
    std::string subject;
    std::string relation;  // relation name, resolved at bind time
    std::string object;
};

// Length-2 implication template: two body atoms sharing exactly one
// variable, head connecting the two endpoint variables.
struct LogicalRule {
    std::string id;
    AtomTemplate body1;
    AtomTemplate body2;
    AtomTemplate head;
    double weight = 1.0;

    std::string to_string() const;
};

// Parses the rule DSL: one rule per line,
//   (A, rel1, B) & (B, rel2, C) => (A, rel3, C) : weight
// The ': weight' clause is optional and defaults to 1.0. '#' starts a
// comment. Malformed syntax raises ParseError; a non-chain variable
// pattern raises ValidationError.
std::vector<LogicalRule> parse_rules(const std::string& text);
std::vector<LogicalRule> parse_rules_file(const std::string& path);

// Rule with relation names resolved against a vocabulary. Variable slots
// are canonicalized: 0 = head subject, 1 = head object, 2 = shared middle.
struct BoundAtom {
    int subject_var = 0;
    RelationId relation = 0;
    int object_var = 0;
};

struct BoundRule {
    std::string id;
    double weight = 1.0;
    BoundAtom body1;
    BoundAtom body2;
    RelationId head_relation = 0;
};

// Unknown relation names raise ValidationError naming the relation.
BoundRule bind_rule(const LogicalRule& rule, const Vocabulary& vocab);
std::vector<BoundRule> bind_rules(const std::vector<LogicalRule>& rules, const Vocabulary& vocab);

// A rule instantiated with two strong observed body facts and an unseen
// head triple. body_value is the Lukasiewicz conjunction of the body
// facts' observed scores.
struct GroundRule {
    WeightedTriple body_fact1;
    WeightedTriple body_fact2;
    Triple head;
    double body_value = 0.0;
    std::string rule_id;
    double weight = 1.0;
};

// All instantiations of `rule` whose head equals head_triple and whose
// body atoms resolve to strong observed facts in the index. A relation
// mismatch yields an empty list.
std::vector<GroundRule> ground_for_head(const BoundRule& rule, const Triple& head_triple,
                                        const FactIndex& index);

// Grounds every applicable rule for a head triple, memoizing per
// (rule, head, tail). Safe for concurrent callers.
class Grounder {
public:
    Grounder(std::vector<BoundRule> rules, const FactIndex& index);

    // Cached ground rules across all rules whose head relation matches.
    // The returned reference stays valid for the Grounder's lifetime.
    const std::vector<GroundRule>& ground(const Triple& head) const;

    std::size_t rule_count() const { return rules_.size(); }
    std::size_t cache_size() const;

private:
    std::vector<BoundRule> rules_;
    const FactIndex& index_;
    std::unordered_map<RelationId, std::vector<std::size_t>> rules_by_head_relation_;

    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<Triple, std::unique_ptr<std::vector<GroundRule>>, TripleHash> cache_;
};

enum class RulePattern {
    Chain,       // (A,r1,B) & (B,r2,C) => (A,r3,C)
    SharedHead,  // (A,r1,B) & (A,r2,C) => (B,r3,C)
};

struct MinedRuleReport {
    LogicalRule rule;
    RulePattern pattern;
    std::size_t support = 0;  // groundable body instantiations (paths)
    std::size_t hits = 0;     // paths whose implied head fact is observed
    double hit_ratio = 0.0;
    bool sampled = false;     // enumeration hit the per-pair cap; ratio is an estimate
};

struct MineOptions {
    double min_hit_ratio = 0.0;
    std::size_t min_support = 1;
    std::size_t max_paths_per_pair = 100000;
};

// Enumerates candidate length-2 rules over strong facts, in both the chain
// and shared-head patterns, and scores each (r1, r2, r3) combination by
// hit ratio. Results are sorted by hit ratio descending.
std::vector<MinedRuleReport> mine_rules(const FactIndex& index, const Vocabulary& vocab,
                                        const MineOptions& opts = {});

}  // namespace ukg
