#pragma once
// Ingestion: parsing, score normalization, dataset splitting and
// negative sampling for uncertain-KG triple data.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ukg/rng.hpp"
#include "ukg/types.hpp"

namespace ukg {

// Reads `head<TAB>relation<TAB>tail<TAB>score` lines. '#'-prefixed lines and
// blank lines are ignored. Vocabulary entries are created on first sight.
// Scores are kept raw; duplicates are kept (see deduplicate).
std::vector<WeightedTriple> parse_triples(std::istream& in, Vocabulary& vocab);
std::vector<WeightedTriple> parse_triples_file(const std::string& path, Vocabulary& vocab);

// Keep-last resolution of duplicate (h, r, t) keys. Preserves first-seen
// position of each key; dropped counts how many earlier occurrences lost.
std::vector<WeightedTriple> deduplicate(const std::vector<WeightedTriple>& triples,
                                        std::size_t* dropped = nullptr);

struct NormalizeMethod {
    enum class Kind { LogMinMax, MinMax, Identity };

    Kind kind = Kind::Identity;
    double lo = 0.0;     // log-min-max clamp bounds
    double hi = 0.0;
    double floor = 0.0;  // lower end of the output interval [floor, 1]

    static NormalizeMethod log_min_max(double lo, double hi, double floor);
    static NormalizeMethod min_max(double floor);
    static NormalizeMethod identity();

    std::string to_string() const;
    static NormalizeMethod from_string(const std::string& text);
};

// Maps raw scores into [0, 1]. log-min-max clamps into [lo, hi] and maps
// log(x) affinely onto [floor, 1]; min-max maps the observed raw range onto
// [floor, 1]; identity validates scores are already in [0, 1].
// Monotone for every method: raw a <= raw b implies normalized a <= b.
std::vector<WeightedTriple> normalize_scores(std::vector<WeightedTriple> triples,
                                             const NormalizeMethod& method);

struct SplitRatios {
    double train = 0.85;
    double validation = 0.07;
    double test = 0.08;
};

// Seeded shuffle-and-cut partition. Sizes land within +-1 of the exact
// proportions. Test negatives are generated by corrupting the head or tail
// of each test triple, rejected while present anywhere in the input KG, and
// carry score 0.
DatasetSplit split_dataset(const std::vector<WeightedTriple>& triples, SplitRatios ratios,
                           std::uint64_t seed, std::size_t entity_count);

struct NegativeSampleStats {
    std::size_t emitted = 0;
    std::size_t skipped = 0;  // gave up after max attempts
};

// For each positive, emits per_positive corrupted triples alternating head
// and tail corruption, each absent from the index. Collisions resample up
// to 100 times, then the slot is skipped and counted.
std::vector<Triple> sample_negatives(std::span<const WeightedTriple> batch, int per_positive,
                                     const FactIndex& index, std::size_t entity_count, Rng& rng,
                                     NegativeSampleStats* stats = nullptr);

}  // namespace ukg
