// ukg: command-line driver for the uncertain-KG embedding toolkit.
// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 internal.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ukg/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"uncertain knowledge-graph embedding toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ukg::kToolVersion);

    ukg::IngestOptions ingest;
    auto* cmd_ing = app.add_subcommand("ingest", "normalize and split a weighted triple file");
    cmd_ing->add_option("--triples", ingest.triples_file, "input TSV (head, relation, tail, score)")
        ->required();
    cmd_ing->add_option("--out", ingest.out_dir, "output split directory")->required();
    cmd_ing->add_option("--normalize", ingest.normalization,
                        "identity | min-max(floor) | log-min-max(lo,hi,floor)")
        ->capture_default_str();
    cmd_ing->add_option("--train-ratio", ingest.ratios.train)->capture_default_str();
    cmd_ing->add_option("--valid-ratio", ingest.ratios.validation)->capture_default_str();
    cmd_ing->add_option("--test-ratio", ingest.ratios.test)->capture_default_str();
    cmd_ing->add_option("--tau", ingest.tau, "strong-fact threshold stored with the split")
        ->capture_default_str();
    cmd_ing->add_option("--seed", ingest.seed)->capture_default_str();

    ukg::SynthOptions synth;
    std::string synth_variant = "logistic";
    auto* cmd_syn = app.add_subcommand("synth", "generate a synthetic uncertain KG");
    cmd_syn->add_option("--out", synth.out_file, "output triples TSV")->required();
    cmd_syn->add_option("--entities", synth.config.entities)->capture_default_str();
    cmd_syn->add_option("--relations", synth.config.relations)->capture_default_str();
    cmd_syn->add_option("--facts", synth.config.facts)->capture_default_str();
    cmd_syn->add_option("--latent-dim", synth.config.latent_dim)->capture_default_str();
    cmd_syn->add_option("--variant", synth_variant, "hidden score map")
        ->check(CLI::IsMember({"logistic", "rectifier"}))
        ->capture_default_str();
    cmd_syn->add_option("--map-weight", synth.config.map_weight)->capture_default_str();
    cmd_syn->add_option("--map-bias", synth.config.map_bias)->capture_default_str();
    cmd_syn->add_option("--seed", synth.config.seed)->capture_default_str();
    cmd_syn->add_option("--transitive-relation", synth.config.transitive_relation,
                        "relation id to close transitively (-1 disables)")
        ->capture_default_str();
    cmd_syn->add_option("--closure-rounds", synth.config.closure_rounds)->capture_default_str();
    cmd_syn->add_option("--min-body-value", synth.config.min_body_value)->capture_default_str();

    ukg::MineRulesOptions mine;
    auto* cmd_mine = app.add_subcommand("mine-rules", "score length-2 rule candidates");
    cmd_mine->add_option("--split", mine.split_dir, "split directory")->required();
    cmd_mine->add_option("--out", mine.out_file, "report TSV")->required();
    cmd_mine->add_option("--tau", mine.tau, "strong-fact threshold (default: split metadata)");
    cmd_mine->add_option("--min-hit-ratio", mine.min_hit_ratio)->capture_default_str();
    cmd_mine->add_option("--min-support", mine.min_support)->capture_default_str();
    cmd_mine->add_option("--max-paths", mine.max_paths_per_pair,
                         "per-pattern path cap before sampling")
        ->capture_default_str();
    cmd_mine->add_option("--emit-rules", mine.emit_rules, "also write top rules as a DSL file");
    cmd_mine->add_option("--emit-limit", mine.emit_limit)->capture_default_str();

    ukg::TrainOptions train;
    auto* cmd_tr = app.add_subcommand("train", "train embeddings on a split");
    cmd_tr->add_option("--split", train.split_dir, "split directory")->required();
    cmd_tr->add_option("--out", train.out_model, "output model file")->required();
    cmd_tr->add_option("--rules", train.rules_file, "logical rule DSL file");
    cmd_tr->add_option("--config", train.config_file, "key = value training config");
    cmd_tr->add_option("--set", train.overrides, "config override key=value (repeatable)");
    cmd_tr->add_option("--resume", train.resume, "continue from a saved model");
    cmd_tr->add_flag("--export-text", train.export_text, "also write <out>.txt");

    ukg::EvalOptionsCli eval;
    auto* cmd_ev = app.add_subcommand("eval", "run task metrics for a trained model");
    cmd_ev->add_option("--model", eval.model_file)->required();
    cmd_ev->add_option("--split", eval.split_dir)->required();
    cmd_ev->add_option("--tasks", eval.tasks, "subset to run (default: all)")
        ->check(CLI::IsMember({"confidence", "ranking", "classification"}));
    cmd_ev->add_flag("--test-only-relevance", eval.test_only_relevance,
                     "restrict ranking relevance to test facts");
    cmd_ev->add_option("--out-prefix", eval.out_prefix, "report path prefix (default <model>.eval)");
    cmd_ev->add_option("--dump-queries", eval.per_query_dump, "per-query nDCG table");

    ukg::PredictOptions predict;
    auto* cmd_pr = app.add_subcommand("predict", "score a triple or rank tails");
    cmd_pr->add_option("--model", predict.model_file)->required();
    cmd_pr->add_option("--split", predict.split_dir, "split directory (vocabulary source)")
        ->required();
    cmd_pr->add_option("--head", predict.head)->required();
    cmd_pr->add_option("--relation", predict.relation)->required();
    cmd_pr->add_option("--tail", predict.tail, "score this tail instead of ranking");
    cmd_pr->add_option("--top-k", predict.top_k)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*cmd_ing) ukg::cmd_ingest(ingest, std::cout);
        if (*cmd_syn) {
            synth.config.variant = ukg::variant_from_string(synth_variant);
            ukg::cmd_synth(synth, std::cout);
        }
        if (*cmd_mine) ukg::cmd_mine_rules(mine, std::cout);
        if (*cmd_tr) ukg::cmd_train(train, std::cout);
        if (*cmd_ev) ukg::cmd_eval(eval, std::cout);
        if (*cmd_pr) ukg::cmd_predict(predict, std::cout);
        return 0;
    } catch (const ukg::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ukg::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
