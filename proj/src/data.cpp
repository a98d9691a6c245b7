#include "ukg/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>

namespace ukg {

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

EntityId Vocabulary::add_entity(const std::string& name) {
    auto it = entity_ids_.find(name);
    if (it != entity_ids_.end()) return it->second;
    auto id = EntityId(entity_names_.size());
    entity_ids_.emplace(name, id);
    entity_names_.push_back(name);
    return id;
}

RelationId Vocabulary::add_relation(const std::string& name) {
    auto it = relation_ids_.find(name);
    if (it != relation_ids_.end()) return it->second;
    auto id = RelationId(relation_names_.size());
    relation_ids_.emplace(name, id);
    relation_names_.push_back(name);
    return id;
}

std::optional<EntityId> Vocabulary::entity_id(const std::string& name) const {
    auto it = entity_ids_.find(name);
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> Vocabulary::relation_id(const std::string& name) const {
    auto it = relation_ids_.find(name);
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
}

const std::string& Vocabulary::entity_name(EntityId id) const {
    if (id >= entity_names_.size()) throw std::out_of_range("entity id out of range");
    return entity_names_[id];
}

const std::string& Vocabulary::relation_name(RelationId id) const {
    if (id >= relation_names_.size()) throw std::out_of_range("relation id out of range");
    return relation_names_[id];
}

static std::uint64_t hash_names(const std::vector<std::string>& names) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& n : names) {
        h = fnv1a64(n.data(), n.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    return h;
}

std::uint64_t Vocabulary::entity_hash() const { return hash_names(entity_names_); }
std::uint64_t Vocabulary::relation_hash() const { return hash_names(relation_names_); }

FactIndex::FactIndex(const std::vector<WeightedTriple>& facts, double tau) : tau_(tau) {
    for (const auto& f : facts) {
        exact_.insert(f.key());
        by_head_rel_[pair_key(f.head, f.relation)].emplace_back(f.tail, f.score);
        if (f.score > tau) {
            strong_by_rel_[f.relation].push_back({f.head, f.tail, f.score});
            strong_by_head_rel_[pair_key(f.head, f.relation)].emplace_back(f.tail, f.score);
            strong_by_rel_tail_[pair_key(f.relation, f.tail)].emplace_back(f.head, f.score);
        }
    }
}

const std::vector<FactIndex::TailScore>* FactIndex::tails(EntityId h, RelationId r) const {
    auto it = by_head_rel_.find(pair_key(h, r));
    return it == by_head_rel_.end() ? nullptr : &it->second;
}

const std::vector<FactIndex::StrongFact>& FactIndex::strong_facts(RelationId r) const {
    static const std::vector<StrongFact> empty;
    auto it = strong_by_rel_.find(r);
    return it == strong_by_rel_.end() ? empty : it->second;
}

const std::vector<FactIndex::TailScore>* FactIndex::strong_tails(EntityId h, RelationId r) const {
    auto it = strong_by_head_rel_.find(pair_key(h, r));
    return it == strong_by_head_rel_.end() ? nullptr : &it->second;
}

const std::vector<FactIndex::HeadScore>* FactIndex::strong_heads(RelationId r, EntityId t) const {
    auto it = strong_by_rel_tail_.find(pair_key(r, t));
    return it == strong_by_rel_tail_.end() ? nullptr : &it->second;
}

std::vector<WeightedTriple> parse_triples(std::istream& in, Vocabulary& vocab) {
    std::vector<WeightedTriple> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (fields.size() < 4)
            throw ParseError("expected 4 tab-separated fields (head, relation, tail, score), got " +
                                 std::to_string(fields.size()),
                             lineno);
        for (int i = 0; i < 3; ++i)
            if (fields[i].empty()) throw ParseError("empty field in triple", lineno);

        double score;
        try {
            std::size_t pos = 0;
            score = std::stod(fields[3], &pos);
            if (pos != fields[3].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ParseError("non-numeric score '" + fields[3] + "'", lineno);
        }
        if (!std::isfinite(score)) throw ParseError("non-finite score", lineno);

        WeightedTriple t;
        t.head = vocab.add_entity(fields[0]);
        t.relation = vocab.add_relation(fields[1]);
        t.tail = vocab.add_entity(fields[2]);
        t.score = score;
        out.push_back(t);
    }
    return out;
}

std::vector<WeightedTriple> parse_triples_file(const std::string& path, Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open triple file: " + path);
    return parse_triples(in, vocab);
}

std::vector<WeightedTriple> deduplicate(const std::vector<WeightedTriple>& triples,
                                        std::size_t* dropped) {
    std::vector<WeightedTriple> out;
    out.reserve(triples.size());
    std::unordered_map<Triple, std::size_t, TripleHash> seen;
    std::size_t lost = 0;
    for (const auto& t : triples) {
        auto [it, fresh] = seen.emplace(t.key(), out.size());
        if (fresh) {
            out.push_back(t);
        } else {
            out[it->second].score = t.score;  // keep-last
            ++lost;
        }
    }
    if (dropped) *dropped = lost;
    return out;
}

NormalizeMethod NormalizeMethod::log_min_max(double lo, double hi, double floor) {
    if (!(lo < hi)) throw ValidationError("log-min-max requires lo < hi");
    if (!(lo > 0.0)) throw ValidationError("log-min-max requires positive bounds");
    if (floor < 0.0 || floor >= 1.0) throw ValidationError("floor must lie in [0, 1)");
    return NormalizeMethod{Kind::LogMinMax, lo, hi, floor};
}

NormalizeMethod NormalizeMethod::min_max(double floor) {
    if (floor < 0.0 || floor >= 1.0) throw ValidationError("floor must lie in [0, 1)");
    return NormalizeMethod{Kind::MinMax, 0.0, 0.0, floor};
}

NormalizeMethod NormalizeMethod::identity() { return NormalizeMethod{Kind::Identity, 0, 0, 0}; }

std::string NormalizeMethod::to_string() const {
    char buf[128];
    switch (kind) {
        case Kind::LogMinMax:
            std::snprintf(buf, sizeof buf, "log-min-max(%.17g,%.17g,%.17g)", lo, hi, floor);
            return buf;
        case Kind::MinMax:
            std::snprintf(buf, sizeof buf, "min-max(%.17g)", floor);
            return buf;
        case Kind::Identity:
            return "identity";
    }
    return "identity";
}

NormalizeMethod NormalizeMethod::from_string(const std::string& text) {
    auto args = [&](std::size_t prefix_len) {
        if (text.back() != ')') throw ValidationError("bad normalization syntax: " + text);
        std::string inner = text.substr(prefix_len, text.size() - prefix_len - 1);
        std::vector<double> vals;
        std::stringstream ss(inner);
        std::string item;
        while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
        return vals;
    };
    if (text == "identity") return identity();
    if (text.rfind("log-min-max(", 0) == 0) {
        auto v = args(12);
        if (v.size() != 3) throw ValidationError("log-min-max expects 3 arguments");
        return log_min_max(v[0], v[1], v[2]);
    }
    if (text.rfind("min-max(", 0) == 0) {
        auto v = args(8);
        if (v.size() != 1) throw ValidationError("min-max expects 1 argument");
        return min_max(v[0]);
    }
    throw ValidationError("unknown normalization method: " + text);
}

std::vector<WeightedTriple> normalize_scores(std::vector<WeightedTriple> triples,
                                             const NormalizeMethod& m) {
    switch (m.kind) {
        case NormalizeMethod::Kind::Identity:
            for (const auto& t : triples)
                if (t.score < 0.0 || t.score > 1.0)
                    throw ValidationError("identity normalization requires scores in [0, 1], got " +
                                          std::to_string(t.score));
            return triples;

        case NormalizeMethod::Kind::LogMinMax: {
            const double log_lo = std::log(m.lo);
            const double span = std::log(m.hi) - log_lo;
            for (auto& t : triples) {
                if (!(t.score > 0.0))
                    throw ValidationError("log normalization requires positive scores, got " +
                                          std::to_string(t.score));
                double x = std::clamp(t.score, m.lo, m.hi);
                t.score = m.floor + (1.0 - m.floor) * (std::log(x) - log_lo) / span;
            }
            return triples;
        }

        case NormalizeMethod::Kind::MinMax: {
            if (triples.empty()) return triples;
            double lo = triples[0].score, hi = triples[0].score;
            for (const auto& t : triples) {
                lo = std::min(lo, t.score);
                hi = std::max(hi, t.score);
            }
            if (!(lo < hi)) throw ValidationError("min-max normalization needs a nonzero score range");
            for (auto& t : triples)
                t.score = m.floor + (1.0 - m.floor) * (t.score - lo) / (hi - lo);
            return triples;
        }
    }
    return triples;
}

DatasetSplit split_dataset(const std::vector<WeightedTriple>& triples, SplitRatios ratios,
                           std::uint64_t seed, std::size_t entity_count) {
    const double sum = ratios.train + ratios.validation + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");

    {
        std::unordered_set<Triple, TripleHash> keys;
        for (const auto& t : triples)
            if (!keys.insert(t.key()).second)
                throw ValidationError("split_dataset requires deduplicated triples");
    }

    const std::size_t n = triples.size();
    const auto n_train = std::size_t(std::llround(ratios.train * double(n)));
    const auto n_val = std::size_t(std::llround(ratios.validation * double(n)));
    if (n_train + n_val > n) throw ValidationError("dataset too small for the requested ratios");
    const std::size_t n_test = n - n_train - n_val;

    if ((ratios.train > 0 && n_train == 0) || (ratios.validation > 0 && n_val == 0) ||
        (ratios.test > 0 && n_test == 0))
        throw ValidationError("dataset too small to give each split at least one triple");

    Rng rng(seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    shuffle(order, rng);

    DatasetSplit split;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& t = triples[order[i]];
        if (i < n_train)
            split.train.push_back(t);
        else if (i < n_train + n_val)
            split.validation.push_back(t);
        else
            split.test.push_back(t);
    }

    if (n_test == 0) return split;
    if (entity_count < 2) throw ValidationError("need at least 2 entities to corrupt triples");

    std::unordered_set<Triple, TripleHash> known;
    for (const auto& t : triples) known.insert(t.key());
    std::unordered_set<Triple, TripleHash> used;

    constexpr int max_attempts = 1000;
    for (const auto& t : split.test) {
        bool placed = false;
        for (int attempt = 0; attempt < max_attempts; ++attempt) {
            Triple cand = t.key();
            bool corrupt_head = uniform_index(rng, 2) == 0;
            auto e = EntityId(uniform_index(rng, entity_count));
            (corrupt_head ? cand.head : cand.tail) = e;
            if (known.count(cand) || used.count(cand)) continue;
            used.insert(cand);
            split.test_negatives.push_back({cand.head, cand.relation, cand.tail, 0.0});
            placed = true;
            break;
        }
        if (!placed)
            throw ValidationError("could not generate an unseen negative for a test triple");
    }
    return split;
}

std::vector<Triple> sample_negatives(std::span<const WeightedTriple> batch, int per_positive,
                                     const FactIndex& index, std::size_t entity_count, Rng& rng,
                                     NegativeSampleStats* stats) {
    if (per_positive < 1) throw ValidationError("per_positive must be >= 1");
    if (entity_count < 2) throw ValidationError("need at least 2 entities to corrupt triples");

    std::vector<Triple> out;
    out.reserve(batch.size() * std::size_t(per_positive));
    constexpr int max_attempts = 100;

    for (const auto& pos : batch) {
        for (int j = 0; j < per_positive; ++j) {
            const bool corrupt_head = (j % 2 == 0);
            bool placed = false;
            for (int attempt = 0; attempt < max_attempts; ++attempt) {
                Triple cand = pos.key();
                auto e = EntityId(uniform_index(rng, entity_count));
                (corrupt_head ? cand.head : cand.tail) = e;
                if (index.contains(cand)) continue;
                out.push_back(cand);
                placed = true;
                break;
            }
            if (stats) {
                if (placed)
                    ++stats->emitted;
                else
                    ++stats->skipped;
            }
        }
    }
    return out;
}

}  // namespace ukg
