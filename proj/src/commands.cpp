#include "ukg/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ukg/evaluator.hpp"
#include "ukg/io.hpp"
#include "ukg/psl.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ukg {

namespace {

bool verbose() {
    const char* level = std::getenv("UKG_LOG_LEVEL");
    return !(level && std::strcmp(level, "quiet") == 0);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open for writing: " + path.string());
    return out;
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string portable_rel(const fs::path& p, const fs::path& base) {
    std::error_code ec;
    fs::path rel = fs::proximate(p, base.empty() ? fs::path(".") : base, ec);
    const fs::path& use = (ec || rel.empty()) ? p : rel;
    return use.generic_string();
}

void write_manifest(const fs::path& path, const std::string& command, std::uint64_t seed,
                    const json& config, const std::vector<fs::path>& inputs,
                    const std::vector<fs::path>& outputs) {
    const fs::path base = path.parent_path();
    json j;
    j["tool"] = "ukg";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["created-utc"] = utc_now();
    j["seed"] = seed;
    j["config"] = config;
    json jin = json::object();
    for (const auto& p : inputs) jin[portable_rel(p, base)] = hex64(fnv1a64_file(p));
    j["inputs"] = jin;
    json jout = json::object();
    for (const auto& p : outputs) jout[portable_rel(p, base)] = hex64(fnv1a64_file(p));
    j["outputs"] = jout;

    auto out = open_out(path);
    out << j.dump(2) << '\n';
    out.flush();
    if (!out) throw ValidationError("write failed: " + path.string());
}

std::vector<fs::path> split_files(const fs::path& dir) {
    return {dir / "train.tsv",    dir / "valid.tsv",     dir / "test.tsv",
            dir / "test_negatives.tsv", dir / "entities.txt", dir / "relations.txt",
            dir / "metadata.json"};
}

json config_json(const TrainConfig& c) {
    return json{
        {"learning-rate", c.learning_rate},
        {"dimension", c.dimension},
        {"batch-size", c.batch_size},
        {"l2-lambda", c.l2_lambda},
        {"negatives-per-positive", c.negatives_per_positive},
        {"variant", variant_name(c.variant)},
        {"ablation", ablation_name(c.ablation)},
        {"adam-beta1", c.adam_beta1},
        {"adam-beta2", c.adam_beta2},
        {"epsilon", c.epsilon},
        {"max-epochs", c.max_epochs},
        {"eval-every", c.eval_every},
        {"patience", c.patience},
        {"seed", c.seed},
        {"tau", c.tau},
    };
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                               prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string nearest_names(const std::vector<std::string>& names, const std::string& query) {
    std::vector<std::pair<std::size_t, std::string>> scored;
    scored.reserve(names.size());
    for (const auto& n : names) scored.emplace_back(levenshtein(n, query), n);
    std::sort(scored.begin(), scored.end());
    std::string out;
    for (std::size_t i = 0; i < scored.size() && i < 3; ++i) {
        if (!out.empty()) out += ", ";
        out += scored[i].second;
    }
    return out.empty() ? "(empty vocabulary)" : out;
}

EntityId resolve_entity(const Vocabulary& vocab, const std::string& name) {
    if (auto id = vocab.entity_id(name)) return *id;
    throw ValidationError("unknown entity '" + name +
                          "'; nearest names: " + nearest_names(vocab.entity_names(), name));
}

RelationId resolve_relation(const Vocabulary& vocab, const std::string& name) {
    if (auto id = vocab.relation_id(name)) return *id;
    throw ValidationError("unknown relation '" + name +
                          "'; nearest names: " + nearest_names(vocab.relation_names(), name));
}

void check_model_matches_vocab(const ModelParams& model, const Vocabulary& vocab,
                               const std::string& what) {
    if (model.entity_vocab_hash != vocab.entity_hash() ||
        model.relation_vocab_hash != vocab.relation_hash())
        throw ValidationError("model was trained on a different vocabulary than " + what);
    if (model.entity_count() != vocab.entity_count() ||
        model.relation_count() != vocab.relation_count())
        throw ValidationError("model matrix sizes do not match the vocabulary of " + what);
}

}  // namespace

bool check_manifest_outputs(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) return false;
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("bad manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!j.contains("outputs") || !j["outputs"].is_object())
        throw ValidationError("manifest has no outputs table: " + manifest_path.string());

    const fs::path base = manifest_path.parent_path();
    for (const auto& [rel, digest] : j["outputs"].items()) {
        const fs::path file = base / fs::path(rel);
        const std::string actual = hex64(fnv1a64_file(file));
        if (actual != digest.get<std::string>())
            throw ValidationError("artifact " + file.string() +
                                  " does not match its manifest digest (expected " +
                                  digest.get<std::string>() + ", got " + actual +
                                  "); regenerate or re-run the producing command");
    }
    return true;
}

void cmd_ingest(const IngestOptions& opts, std::ostream& out) {
    const NormalizeMethod method = NormalizeMethod::from_string(opts.normalization);
    if (!(opts.tau >= 0.0 && opts.tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]");

    Vocabulary vocab;
    auto raw = parse_triples_file(opts.triples_file.string(), vocab);
    if (raw.empty()) throw ValidationError("no triples in " + opts.triples_file.string());

    std::size_t dropped = 0;
    auto facts = normalize_scores(deduplicate(raw, &dropped), method);
    auto split = split_dataset(facts, opts.ratios, opts.seed, vocab.entity_count());

    SplitMetadata meta;
    meta.seed = opts.seed;
    meta.ratios = opts.ratios;
    meta.tau = opts.tau;
    meta.normalization = method;
    meta.dropped_duplicates = dropped;
    save_split(opts.out_dir, split, vocab, meta);

    const json config = {{"normalization", method.to_string()},
                         {"ratios",
                          {{"train", opts.ratios.train},
                           {"validation", opts.ratios.validation},
                           {"test", opts.ratios.test}}},
                         {"tau", opts.tau},
                         {"seed", opts.seed}};
    write_manifest(opts.out_dir / "manifest.json", "ingest", opts.seed, config,
                   {opts.triples_file}, split_files(opts.out_dir));

    out << "ingest: " << facts.size() << " facts (" << dropped << " duplicate keys dropped), "
        << vocab.entity_count() << " entities, " << vocab.relation_count() << " relations\n"
        << "  train/valid/test/negatives: " << split.train.size() << "/"
        << split.validation.size() << "/" << split.test.size() << "/"
        << split.test_negatives.size() << "\n"
        << "  wrote " << opts.out_dir.string() << "\n";
}

void cmd_synth(const SynthOptions& opts, std::ostream& out) {
    SynthResult result = generate_synthetic(opts.config);
    save_triples_tsv(opts.out_file, result.triples, result.vocab);

    const auto& c = opts.config;
    const json config = {{"entities", c.entities},
                         {"relations", c.relations},
                         {"facts", c.facts},
                         {"latent-dim", c.latent_dim},
                         {"variant", variant_name(c.variant)},
                         {"map-weight", c.map_weight},
                         {"map-bias", c.map_bias},
                         {"seed", c.seed},
                         {"transitive-relation", c.transitive_relation},
                         {"closure-rounds", c.closure_rounds},
                         {"min-body-value", c.min_body_value}};
    fs::path manifest = opts.out_file;
    manifest += ".manifest.json";
    write_manifest(manifest, "synth", c.seed, config, {}, {opts.out_file});

    out << "synth: " << result.triples.size() << " facts (" << result.implied.size()
        << " from closure), " << c.entities << " entities, " << c.relations << " relations\n"
        << "  wrote " << opts.out_file.string() << "\n";
}

void cmd_mine_rules(const MineRulesOptions& opts, std::ostream& out) {
    LoadedSplit loaded = load_split(opts.split_dir);
    const double tau = opts.tau.value_or(loaded.meta.tau);
    if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]");

    const FactIndex index(loaded.split.train, tau);
    MineOptions mine_opts;
    mine_opts.min_hit_ratio = opts.min_hit_ratio;
    mine_opts.min_support = opts.min_support;
    mine_opts.max_paths_per_pair = opts.max_paths_per_pair;
    const auto reports = mine_rules(index, loaded.vocab, mine_opts);

    {
        auto f = open_out(opts.out_file);
        f << "# pattern\trule\tsupport\thits\thit_ratio\tsampled\n";
        for (const auto& r : reports)
            f << (r.pattern == RulePattern::Chain ? "chain" : "shared-head") << '\t'
              << r.rule.to_string() << '\t' << r.support << '\t' << r.hits << '\t'
              << format_double(r.hit_ratio) << '\t' << (r.sampled ? 1 : 0) << '\n';
        f.flush();
        if (!f) throw ValidationError("write failed: " + opts.out_file.string());
    }

    std::vector<fs::path> outputs{opts.out_file};
    if (opts.emit_rules) {
        auto f = open_out(*opts.emit_rules);
        f << "# top " << opts.emit_limit << " mined rules by hit ratio\n";
        for (std::size_t i = 0; i < reports.size() && i < opts.emit_limit; ++i)
            f << reports[i].rule.to_string() << '\n';
        f.flush();
        if (!f) throw ValidationError("write failed: " + opts.emit_rules->string());
        outputs.push_back(*opts.emit_rules);
    }

    const json config = {{"tau", tau},
                         {"min-hit-ratio", opts.min_hit_ratio},
                         {"min-support", opts.min_support},
                         {"max-paths-per-pair", opts.max_paths_per_pair}};
    fs::path manifest = opts.out_file;
    manifest += ".manifest.json";
    write_manifest(manifest, "mine-rules", loaded.meta.seed, config, split_files(opts.split_dir),
                   outputs);

    out << "mine-rules: " << reports.size() << " candidate rules";
    if (!reports.empty())
        out << ", best hit ratio " << format_double(reports.front().hit_ratio) << " ("
            << reports.front().rule.id << ")";
    out << "\n  wrote " << opts.out_file.string() << "\n";
}

void cmd_train(const TrainOptions& opts, std::ostream& out) {
    LoadedSplit loaded = load_split(opts.split_dir);

    TrainConfig config;
    if (opts.config_file) config = load_train_config(*opts.config_file);
    for (const auto& ov : opts.overrides) apply_override(config, ov);
    config.tau = loaded.meta.tau;
    config.validate();

    std::vector<LogicalRule> rules;
    if (opts.rules_file) rules = parse_rules_file(opts.rules_file->string());
    bind_rules(rules, loaded.vocab);  // unknown relations fail before training

    std::optional<ModelParams> initial;
    if (opts.resume) {
        initial = load_model(*opts.resume);
        check_model_matches_vocab(*initial, loaded.vocab, "this split");
        if (initial->dim != config.dimension)
            throw ValidationError("resume model has dimension " + std::to_string(initial->dim) +
                                  " but the config asks for " + std::to_string(config.dimension));
        if (initial->variant != config.variant)
            throw ValidationError(std::string("resume model variant ") +
                                  variant_name(initial->variant) +
                                  " conflicts with configured variant " +
                                  variant_name(config.variant));
    }

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result =
        train(config, loaded.split, rules, loaded.vocab, initial ? &*initial : nullptr);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    save_model(opts.out_model, result.best);
    fs::path log_path = opts.out_model;
    log_path += ".log";
    save_train_log(log_path, result.log);

    std::vector<fs::path> outputs{opts.out_model, log_path};
    if (opts.export_text) {
        fs::path text_path = opts.out_model;
        text_path += ".txt";
        export_model_text(text_path, result.best, loaded.vocab);
        outputs.push_back(text_path);
    }

    json config_snapshot = config_json(config);
    config_snapshot["rules-file"] = opts.rules_file ? opts.rules_file->generic_string() : "";
    config_snapshot["resume"] = opts.resume ? opts.resume->generic_string() : "";

    std::vector<fs::path> inputs = split_files(opts.split_dir);
    if (opts.rules_file) inputs.push_back(*opts.rules_file);
    if (opts.config_file) inputs.push_back(*opts.config_file);
    if (opts.resume) inputs.push_back(*opts.resume);
    fs::path manifest = opts.out_model;
    manifest += ".manifest.json";
    write_manifest(manifest, "train", config.seed, config_snapshot, inputs, outputs);

    out << "train: " << result.epochs_run << " epochs, variant " << variant_name(config.variant)
        << ", ablation " << ablation_name(config.ablation) << "\n";
    if (!result.log.empty())
        out << "  final train MSE "
            << format_double(result.log.back().j_pos / double(loaded.split.train.size())) << "\n";
    if (result.best_val_mse)
        out << "  best validation MSE " << format_double(*result.best_val_mse) << "\n";
    if (result.negative_stats.skipped > 0)
        out << "  negative sampling skipped " << result.negative_stats.skipped << " slots\n";
    if (verbose()) out << "  wall time " << format_double(secs) << "s\n";
    out << "  wrote " << opts.out_model.string() << "\n";
}

void cmd_eval(const EvalOptionsCli& opts, std::ostream& out) {
    // Refuse silently modified artifacts when their manifests are present.
    fs::path model_manifest = opts.model_file;
    model_manifest += ".manifest.json";
    check_manifest_outputs(model_manifest);
    check_manifest_outputs(opts.split_dir / "manifest.json");

    LoadedSplit loaded = load_split(opts.split_dir);
    const ModelParams model = load_model(opts.model_file);
    check_model_matches_vocab(model, loaded.vocab, "this split");

    EvalOptions eval_opts;
    if (!opts.tasks.empty()) {
        eval_opts.confidence_task = false;
        eval_opts.ranking_task = false;
        eval_opts.classification_task = false;
        for (const auto& t : opts.tasks) {
            if (t == "confidence")
                eval_opts.confidence_task = true;
            else if (t == "ranking")
                eval_opts.ranking_task = true;
            else if (t == "classification")
                eval_opts.classification_task = true;
            else
                throw ValidationError("unknown task '" + t +
                                      "' (expected confidence, ranking or classification)");
        }
    }
    eval_opts.whole_kg_relevance = !opts.test_only_relevance;
    eval_opts.tau = loaded.meta.tau;

    const EvalReport report = evaluate(model, loaded.split, eval_opts);

    fs::path prefix = opts.out_prefix.value_or([&] {
        fs::path p = opts.model_file;
        p += ".eval";
        return p;
    }());
    fs::path txt_path = prefix;
    txt_path += ".txt";
    fs::path json_path = prefix;
    json_path += ".json";

    json j;
    {
        auto f = open_out(txt_path);
        if (report.confidence_all) {
            f << "mse\t" << format_double(report.confidence_all->mse) << '\n';
            f << "mae\t" << format_double(report.confidence_all->mae) << '\n';
            f << "confidence-count\t" << report.confidence_all->count << '\n';
            f << "mse-observed\t" << format_double(report.confidence_observed->mse) << '\n';
            f << "mae-observed\t" << format_double(report.confidence_observed->mae) << '\n';
            f << "observed-count\t" << report.confidence_observed->count << '\n';
            j["confidence"] = {{"mse", report.confidence_all->mse},
                               {"mae", report.confidence_all->mae},
                               {"count", report.confidence_all->count},
                               {"observed",
                                {{"mse", report.confidence_observed->mse},
                                 {"mae", report.confidence_observed->mae},
                                 {"count", report.confidence_observed->count}}}};
        }
        if (report.ndcg_linear) {
            f << "ndcg-linear\t" << format_double(report.ndcg_linear->value) << '\n';
            f << "ndcg-exp\t" << format_double(report.ndcg_exp->value) << '\n';
            f << "ranking-queries-evaluated\t" << report.ndcg_linear->evaluated << '\n';
            f << "ranking-queries-skipped\t" << report.ndcg_linear->skipped << '\n';
            j["ranking"] = {{"ndcg-linear", report.ndcg_linear->value},
                            {"ndcg-exp", report.ndcg_exp->value},
                            {"evaluated", report.ndcg_linear->evaluated},
                            {"skipped", report.ndcg_linear->skipped}};
        }
        if (report.classification) {
            f << "f1\t" << format_double(report.classification->f1) << '\n';
            f << "accuracy\t" << format_double(report.classification->accuracy) << '\n';
            f << "classification-test-count\t" << report.classification->test_count << '\n';
            j["classification"] = {{"f1", report.classification->f1},
                                   {"accuracy", report.classification->accuracy},
                                   {"test-count", report.classification->test_count},
                                   {"slope", report.classification->slope},
                                   {"intercept", report.classification->intercept}};
        }
        f.flush();
        if (!f) throw ValidationError("write failed: " + txt_path.string());
    }
    {
        auto f = open_out(json_path);
        f << j.dump(2) << '\n';
        f.flush();
        if (!f) throw ValidationError("write failed: " + json_path.string());
    }

    std::vector<fs::path> outputs{txt_path, json_path};
    if (opts.per_query_dump) {
        auto f = open_out(*opts.per_query_dump);
        f << "# head\trelation\trelevant\tndcg_linear\tndcg_exp\n";
        for (const auto& q : build_rank_queries(loaded.split, eval_opts.whole_kg_relevance)) {
            auto lin = ndcg(q, model, Gain::Linear, model.entity_count());
            auto exp = ndcg(q, model, Gain::Exponential, model.entity_count());
            f << loaded.vocab.entity_name(q.head) << '\t'
              << loaded.vocab.relation_name(q.relation) << '\t' << q.relevance.size() << '\t'
              << (lin ? format_double(*lin) : std::string("-")) << '\t'
              << (exp ? format_double(*exp) : std::string("-")) << '\n';
        }
        f.flush();
        if (!f) throw ValidationError("write failed: " + opts.per_query_dump->string());
        outputs.push_back(*opts.per_query_dump);
    }

    json config = {{"tasks", opts.tasks},
                   {"relevance-pool", eval_opts.whole_kg_relevance ? "whole-kg" : "test-only"},
                   {"tau", eval_opts.tau}};
    std::vector<fs::path> inputs = split_files(opts.split_dir);
    inputs.push_back(opts.model_file);
    fs::path manifest = prefix;
    manifest += ".manifest.json";
    write_manifest(manifest, "eval", loaded.meta.seed, config, inputs, outputs);

    out << "eval:";
    if (report.confidence_all)
        out << " mse " << format_double(report.confidence_all->mse) << ", mae "
            << format_double(report.confidence_all->mae) << ";";
    if (report.ndcg_linear)
        out << " ndcg-linear " << format_double(report.ndcg_linear->value) << ", ndcg-exp "
            << format_double(report.ndcg_exp->value) << ";";
    if (report.classification)
        out << " f1 " << format_double(report.classification->f1) << ", accuracy "
            << format_double(report.classification->accuracy) << ";";
    out << "\n  wrote " << txt_path.string() << "\n";
}

void cmd_predict(const PredictOptions& opts, std::ostream& out) {
    LoadedSplit loaded = load_split(opts.split_dir);
    const ModelParams model = load_model(opts.model_file);
    check_model_matches_vocab(model, loaded.vocab, "this split");

    const EntityId h = resolve_entity(loaded.vocab, opts.head);
    const RelationId r = resolve_relation(loaded.vocab, opts.relation);

    // Observed ground-truth scores for this (h, r), from all three splits.
    std::unordered_map<EntityId, double> observed;
    for (const auto* part : {&loaded.split.train, &loaded.split.validation, &loaded.split.test})
        for (const auto& wt : *part)
            if (wt.head == h && wt.relation == r) observed[wt.tail] = wt.score;

    if (opts.tail) {
        const EntityId t = resolve_entity(loaded.vocab, *opts.tail);
        out << format_double(confidence(model, Triple{h, r, t})) << "\n";
        auto it = observed.find(t);
        if (it != observed.end()) out << "observed\t" << format_double(it->second) << "\n";
        return;
    }

    std::vector<std::pair<double, EntityId>> ranked;
    ranked.reserve(model.entity_count());
    for (std::size_t e = 0; e < model.entity_count(); ++e)
        ranked.emplace_back(confidence(model, Triple{h, r, EntityId(e)}), EntityId(e));
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    const std::size_t k = std::min(opts.top_k, ranked.size());
    out << "rank\ttail\tconfidence\tobserved\n";
    for (std::size_t i = 0; i < k; ++i) {
        auto it = observed.find(ranked[i].second);
        out << (i + 1) << '\t' << loaded.vocab.entity_name(ranked[i].second) << '\t'
            << format_double(ranked[i].first) << '\t'
            << (it != observed.end() ? format_double(it->second) : std::string("-")) << '\n';
    }
}

}  // namespace ukg
