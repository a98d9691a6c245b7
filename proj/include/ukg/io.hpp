#pragma once
// On-disk formats: TSV triple files, dataset-split directories with
// metadata, binary model files plus a text export, training logs, and
// key-value training config files with CLI-style overrides.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ukg/data.hpp"
#include "ukg/model.hpp"
#include "ukg/trainer.hpp"
#include "ukg/types.hpp"

namespace ukg {

// Shortest formatting that still round-trips binary64 exactly (%.17g).
std::string format_double(double x);

// Streaming digest of a file's bytes; throws ValidationError when unreadable.
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

// head<TAB>relation<TAB>tail<TAB>score rows, scores exact-round-trip.
void save_triples_tsv(const std::filesystem::path& path,
                      const std::vector<WeightedTriple>& triples, const Vocabulary& vocab);

// Loads a TSV against a fixed vocabulary; unknown names are errors.
std::vector<WeightedTriple> load_triples_tsv(const std::filesystem::path& path,
                                             const Vocabulary& vocab);

struct SplitMetadata {
    std::uint64_t seed = 0;
    SplitRatios ratios;
    double tau = 0.85;  // strong-fact threshold carried to mining/training/eval
    NormalizeMethod normalization;
    std::size_t dropped_duplicates = 0;
};

// Writes train/valid/test/test_negatives TSVs, entity and relation name
// lists (one per line, id order), and metadata.json into dir.
void save_split(const std::filesystem::path& dir, const DatasetSplit& split,
                const Vocabulary& vocab, const SplitMetadata& meta);

struct LoadedSplit {
    DatasetSplit split;
    Vocabulary vocab;
    SplitMetadata meta;
};

LoadedSplit load_split(const std::filesystem::path& dir);

// Binary model format, fixed little-endian layout with a magic header;
// load re-checks magic, byte order, variant and payload size.
void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);

// Human-readable dump: header plus one named row per embedding.
void export_model_text(const std::filesystem::path& path, const ModelParams& params,
                       const Vocabulary& vocab);

// Tab-separated log, one row per evaluation record; absent validation MSE
// prints as '-'. Byte-deterministic for a fixed record list.
void save_train_log(const std::filesystem::path& path, const std::vector<EvalRecord>& log);

// Key-value config: one `key = value` per line, '#' comments. Keys:
//   learning-rate, dimension, batch-size, l2-lambda, negatives-per-positive,
//   variant, ablation, adam-beta1, adam-beta2, epsilon, max-epochs,
//   eval-every, patience, seed
// Unknown keys are errors.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);

// Applies a single `key=value` override using the config-file key set.
void apply_override(TrainConfig& config, const std::string& key_equals_value);

}  // namespace ukg
