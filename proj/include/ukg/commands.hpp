#pragma once
// Command implementations behind the CLI. Each cmd_* runs one subcommand
// end to end, writes its artifacts plus a JSON run manifest with input and
// output digests, and prints a short summary to the given stream.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ukg/data.hpp"
#include "ukg/synth.hpp"
#include "ukg/trainer.hpp"

namespace ukg {

inline constexpr const char* kToolVersion = "0.1.0";

// Recomputes the digests recorded under "outputs" in a manifest; throws
// ValidationError on any mismatch (tampered or regenerated artifacts).
// Returns false when no manifest exists at the path.
bool check_manifest_outputs(const std::filesystem::path& manifest_path);

struct IngestOptions {
    std::filesystem::path triples_file;
    std::filesystem::path out_dir;
    std::string normalization = "identity";  // NormalizeMethod::from_string format
    SplitRatios ratios;
    double tau = 0.85;
    std::uint64_t seed = 1;
};

void cmd_ingest(const IngestOptions& opts, std::ostream& out);

struct SynthOptions {
    SynthConfig config;
    std::filesystem::path out_file;  // raw triples TSV
};

void cmd_synth(const SynthOptions& opts, std::ostream& out);

struct MineRulesOptions {
    std::filesystem::path split_dir;
    std::filesystem::path out_file;
    std::optional<double> tau;  // default: the split's stored threshold
    double min_hit_ratio = 0.0;
    std::size_t min_support = 1;
    std::size_t max_paths_per_pair = 100000;
    std::optional<std::filesystem::path> emit_rules;  // top rules as a DSL file
    std::size_t emit_limit = 20;
};

void cmd_mine_rules(const MineRulesOptions& opts, std::ostream& out);

struct TrainOptions {
    std::filesystem::path split_dir;
    std::filesystem::path out_model;
    std::optional<std::filesystem::path> rules_file;
    std::optional<std::filesystem::path> config_file;
    std::vector<std::string> overrides;  // key=value, applied after the config file
    std::optional<std::filesystem::path> resume;  // continue from a saved model
    bool export_text = false;            // also write <out-model>.txt
};

void cmd_train(const TrainOptions& opts, std::ostream& out);

struct EvalOptionsCli {
    std::filesystem::path model_file;
    std::filesystem::path split_dir;
    std::vector<std::string> tasks;  // subset of confidence|ranking|classification; empty = all
    bool test_only_relevance = false;
    std::optional<std::filesystem::path> out_prefix;  // default: <model>.eval
    std::optional<std::filesystem::path> per_query_dump;
};

void cmd_eval(const EvalOptionsCli& opts, std::ostream& out);

struct PredictOptions {
    std::filesystem::path model_file;
    std::filesystem::path split_dir;  // vocabulary and observed-score source
    std::string head;
    std::string relation;
    std::optional<std::string> tail;  // full-triple query when present
    std::size_t top_k = 10;
};

void cmd_predict(const PredictOptions& opts, std::ostream& out);

}  // namespace ukg
