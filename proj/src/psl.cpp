#include "ukg/psl.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_set>

namespace ukg {

static void check_unit(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error(std::string(what) + " outside [0, 1]: " + std::to_string(x));
}

double luk_and(double a, double b) {
    check_unit(a, "luk_and input");
    check_unit(b, "luk_and input");
    return std::max(0.0, a + b - 1.0);
}

double luk_or(double a, double b) {
    check_unit(a, "luk_or input");
    check_unit(b, "luk_or input");
    return std::min(1.0, a + b);
}

double luk_neg(double a) {
    check_unit(a, "luk_neg input");
    return 1.0 - a;
}

double rule_value(double body_value, double head_value) {
    check_unit(body_value, "rule body value");
    check_unit(head_value, "rule head value");
    return std::min(1.0, 1.0 - body_value + head_value);
}

double distance_to_satisfaction(double body_value, double head_value) {
    check_unit(body_value, "rule body value");
    check_unit(head_value, "rule head value");
    return std::max(0.0, body_value - head_value);
}

double prior_rule_distance(double head_confidence) {
    check_unit(head_confidence, "head confidence");
    return head_confidence;
}

std::string LogicalRule::to_string() const {
    auto atom = [](const AtomTemplate& a) {
        return "(" + a.subject + ", " + a.relation + ", " + a.object + ")";
    };
    std::ostringstream os;
    os << atom(body1) << " & " << atom(body2) << " => " << atom(head) << " : " << weight;
    return os.str();
}

namespace {

struct LineCursor {
    const std::string& s;
    std::size_t pos = 0;
    std::size_t lineno;

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    void expect(char c, const char* what) {
        skip_ws();
        if (pos >= s.size() || s[pos] != c)
            throw ParseError(std::string("expected '") + c + "' " + what, lineno);
        ++pos;
    }

    bool try_consume(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    std::string token_until(const char* stops) {
        skip_ws();
        std::size_t start = pos;
        while (pos < s.size() && !std::strchr(stops, s[pos])) ++pos;
        std::size_t end = pos;
        while (end > start && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
        return s.substr(start, end - start);
    }

    bool at_end() {
        skip_ws();
        return pos >= s.size();
    }
};

bool is_variable(const std::string& tok) {
    if (tok.empty() || !std::isupper(static_cast<unsigned char>(tok[0]))) return false;
    for (char c : tok)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

AtomTemplate parse_atom(LineCursor& cur) {
    AtomTemplate atom;
    cur.expect('(', "to open an atom");
    atom.subject = cur.token_until(",)");
    cur.expect(',', "after atom subject");
    atom.relation = cur.token_until(",)");
    cur.expect(',', "after atom relation");
    atom.object = cur.token_until(",)");
    cur.expect(')', "to close the atom");
    if (atom.relation.empty()) throw ParseError("empty relation name in atom", cur.lineno);
    if (!is_variable(atom.subject))
        throw ParseError("'" + atom.subject + "' is not a capitalized variable", cur.lineno);
    if (!is_variable(atom.object))
        throw ParseError("'" + atom.object + "' is not a capitalized variable", cur.lineno);
    return atom;
}

// Body atoms must share exactly one variable; the head must connect the two
// remaining endpoints.
void validate_shape(const LogicalRule& r) {
    auto shape_error = [&](const std::string& why) {
        throw ValidationError("rule " + r.id + " is not a length-2 chain rule: " + why);
    };

    if (r.body1.subject == r.body1.object || r.body2.subject == r.body2.object ||
        r.head.subject == r.head.object)
        shape_error("an atom repeats a variable");

    std::vector<std::string> b1{r.body1.subject, r.body1.object};
    std::vector<std::string> b2{r.body2.subject, r.body2.object};
    std::vector<std::string> shared;
    for (const auto& v : b1)
        if (v == b2[0] || v == b2[1]) shared.push_back(v);
    if (shared.size() != 1) shape_error("body atoms must share exactly one variable");

    std::unordered_set<std::string> endpoints;
    for (const auto& v : b1)
        if (v != shared[0]) endpoints.insert(v);
    for (const auto& v : b2)
        if (v != shared[0]) endpoints.insert(v);
    if (endpoints.size() != 2) shape_error("body must introduce exactly two endpoint variables");

    if (!endpoints.count(r.head.subject) || !endpoints.count(r.head.object))
        shape_error("head variables must be the body's endpoint variables");
    if (r.head.subject == shared[0] || r.head.object == shared[0])
        shape_error("head must not use the shared middle variable");
}

}  // namespace

std::vector<LogicalRule> parse_rules(const std::string& text) {
    std::vector<LogicalRule> rules;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        bool blank = true;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
        if (blank) continue;

        LineCursor cur{line, 0, lineno};
        LogicalRule rule;
        rule.id = "L" + std::to_string(lineno);
        rule.body1 = parse_atom(cur);
        cur.expect('&', "between body atoms");
        rule.body2 = parse_atom(cur);
        cur.expect('=', "before '=>'");
        cur.expect('>', "to complete '=>'");
        rule.head = parse_atom(cur);
        if (cur.try_consume(':')) {
            std::string wtok = cur.token_until(" \t");
            try {
                std::size_t pos = 0;
                rule.weight = std::stod(wtok, &pos);
                if (pos != wtok.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw ParseError("bad rule weight '" + wtok + "'", lineno);
            }
            if (!(rule.weight > 0.0)) throw ValidationError("rule weight must be positive");
        }
        if (!cur.at_end()) throw ParseError("unexpected trailing text in rule", lineno);

        validate_shape(rule);
        rules.push_back(std::move(rule));
    }
    return rules;
}

std::vector<LogicalRule> parse_rules_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open rule file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_rules(ss.str());
}

BoundRule bind_rule(const LogicalRule& rule, const Vocabulary& vocab) {
    auto rel_id = [&](const std::string& name) {
        auto id = vocab.relation_id(name);
        if (!id)
            throw ValidationError("rule " + rule.id + " references unknown relation '" + name + "'");
        return *id;
    };

    // Slots: 0 = head subject, 1 = head object, 2 = shared middle.
    auto slot = [&](const std::string& var) {
        if (var == rule.head.subject) return 0;
        if (var == rule.head.object) return 1;
        return 2;
    };

    BoundRule b;
    b.id = rule.id;
    b.weight = rule.weight;
    b.head_relation = rel_id(rule.head.relation);
    b.body1 = {slot(rule.body1.subject), rel_id(rule.body1.relation), slot(rule.body1.object)};
    b.body2 = {slot(rule.body2.subject), rel_id(rule.body2.relation), slot(rule.body2.object)};
    return b;
}

std::vector<BoundRule> bind_rules(const std::vector<LogicalRule>& rules, const Vocabulary& vocab) {
    std::vector<BoundRule> out;
    out.reserve(rules.size());
    for (const auto& r : rules) out.push_back(bind_rule(r, vocab));
    return out;
}

namespace {

// Candidate middle entities for one body atom under a fixed head binding,
// with the matching strong fact's score.
std::vector<std::pair<EntityId, double>> middle_candidates(const BoundAtom& atom,
                                                           const Triple& head,
                                                           const FactIndex& index) {
    auto value = [&](int var) { return var == 0 ? head.head : head.tail; };
    std::vector<std::pair<EntityId, double>> out;
    if (atom.object_var == 2) {
        if (const auto* tails = index.strong_tails(value(atom.subject_var), atom.relation))
            out = *tails;
    } else {
        if (const auto* heads = index.strong_heads(atom.relation, value(atom.object_var)))
            out = *heads;
    }
    return out;
}

WeightedTriple instantiate(const BoundAtom& atom, const Triple& head, EntityId middle,
                           double score) {
    auto value = [&](int var) {
        if (var == 0) return head.head;
        if (var == 1) return head.tail;
        return middle;
    };
    return {value(atom.subject_var), atom.relation, value(atom.object_var), score};
}

}  // namespace

std::vector<GroundRule> ground_for_head(const BoundRule& rule, const Triple& head_triple,
                                        const FactIndex& index) {
    std::vector<GroundRule> out;
    if (head_triple.relation != rule.head_relation) return out;

    auto cand1 = middle_candidates(rule.body1, head_triple, index);
    if (cand1.empty()) return out;
    auto cand2 = middle_candidates(rule.body2, head_triple, index);
    if (cand2.empty()) return out;

    std::unordered_map<EntityId, double> second;
    second.reserve(cand2.size());
    for (const auto& [m, s] : cand2) second.emplace(m, s);

    for (const auto& [m, s1] : cand1) {
        auto it = second.find(m);
        if (it == second.end()) continue;
        GroundRule g;
        g.body_fact1 = instantiate(rule.body1, head_triple, m, s1);
        g.body_fact2 = instantiate(rule.body2, head_triple, m, it->second);
        g.head = head_triple;
        g.body_value = luk_and(s1, it->second);
        g.rule_id = rule.id;
        g.weight = rule.weight;
        out.push_back(std::move(g));
    }
    return out;
}

Grounder::Grounder(std::vector<BoundRule> rules, const FactIndex& index)
    : rules_(std::move(rules)), index_(index) {
    for (std::size_t i = 0; i < rules_.size(); ++i)
        rules_by_head_relation_[rules_[i].head_relation].push_back(i);
}

const std::vector<GroundRule>& Grounder::ground(const Triple& head) const {
    {
        std::shared_lock lock(mutex_);
        auto it = cache_.find(head);
        if (it != cache_.end()) return *it->second;
    }

    auto grounded = std::make_unique<std::vector<GroundRule>>();
    auto it = rules_by_head_relation_.find(head.relation);
    if (it != rules_by_head_relation_.end()) {
        for (std::size_t ri : it->second) {
            auto part = ground_for_head(rules_[ri], head, index_);
            grounded->insert(grounded->end(), std::make_move_iterator(part.begin()),
                             std::make_move_iterator(part.end()));
        }
    }

    std::unique_lock lock(mutex_);
    auto [pos, inserted] = cache_.try_emplace(head, std::move(grounded));
    return *pos->second;
}

std::size_t Grounder::cache_size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

namespace {

LogicalRule make_candidate(RulePattern pattern, const std::string& r1, const std::string& r2,
                           const std::string& r3) {
    LogicalRule rule;
    rule.weight = 1.0;
    if (pattern == RulePattern::Chain) {
        rule.id = "chain:" + r1 + "," + r2 + "=>" + r3;
        rule.body1 = {"A", r1, "B"};
        rule.body2 = {"B", r2, "C"};
        rule.head = {"A", r3, "C"};
    } else {
        rule.id = "shared-head:" + r1 + "," + r2 + "=>" + r3;
        rule.body1 = {"A", r1, "B"};
        rule.body2 = {"A", r2, "C"};
        rule.head = {"B", r3, "C"};
    }
    return rule;
}

}  // namespace

std::vector<MinedRuleReport> mine_rules(const FactIndex& index, const Vocabulary& vocab,
                                        const MineOptions& opts) {
    const std::size_t n_rel = vocab.relation_count();
    std::vector<MinedRuleReport> out;

    // Implied head pairs for one (pattern, r1, r2) body; hit counts per r3.
    auto scan_pair = [&](RulePattern pattern, RelationId r1, RelationId r2) {
        std::size_t paths = 0;
        bool capped = false;
        std::vector<std::size_t> hits(n_rel, 0);

        for (const auto& f1 : index.strong_facts(r1)) {
            const EntityId pivot = pattern == RulePattern::Chain ? f1.tail : f1.head;
            const auto* seconds = index.strong_tails(pivot, r2);
            if (!seconds) continue;
            for (const auto& [other, s2] : *seconds) {
                if (paths >= opts.max_paths_per_pair) {
                    capped = true;
                    break;
                }
                ++paths;
                const EntityId impl_h = pattern == RulePattern::Chain ? f1.head : f1.tail;
                const EntityId impl_t = other;
                for (RelationId r3 = 0; r3 < n_rel; ++r3)
                    if (index.contains({impl_h, r3, impl_t})) ++hits[r3];
            }
            if (capped) break;
        }
        if (paths == 0 || paths < opts.min_support) return;

        for (RelationId r3 = 0; r3 < n_rel; ++r3) {
            double ratio = double(hits[r3]) / double(paths);
            if (ratio < opts.min_hit_ratio) continue;
            MinedRuleReport rep;
            rep.rule = make_candidate(pattern, vocab.relation_name(r1), vocab.relation_name(r2),
                                      vocab.relation_name(r3));
            rep.pattern = pattern;
            rep.support = paths;
            rep.hits = hits[r3];
            rep.hit_ratio = ratio;
            rep.sampled = capped;
            out.push_back(std::move(rep));
        }
    };

    for (RelationId r1 = 0; r1 < n_rel; ++r1)
        for (RelationId r2 = 0; r2 < n_rel; ++r2) {
            scan_pair(RulePattern::Chain, r1, r2);
            scan_pair(RulePattern::SharedHead, r1, r2);
        }

    std::sort(out.begin(), out.end(), [](const MinedRuleReport& a, const MinedRuleReport& b) {
        if (a.hit_ratio != b.hit_ratio) return a.hit_ratio > b.hit_ratio;
        if (a.support != b.support) return a.support > b.support;
        return a.rule.id < b.rule.id;
    });
    return out;
}

}  // namespace ukg
