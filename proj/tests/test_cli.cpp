#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ukg/commands.hpp"
#include "ukg/evaluator.hpp"
#include "ukg/io.hpp"
#include "ukg/psl.hpp"
#include "ukg/types.hpp"

using namespace ukg;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// One shared workspace: synthetic KG with a planted transitive relation,
// ingested to a split, with one trained model. Built once, reused read-only.
struct CliFixture {
    fs::path root;
    fs::path raw;
    fs::path split_dir;
    fs::path model;

    CliFixture() {
        setenv("UKG_LOG_LEVEL", "quiet", 1);
        root = fs::temp_directory_path() / "ukg-cli-tests";
        fs::remove_all(root);
        fs::create_directories(root);
        raw = root / "raw.tsv";
        split_dir = root / "split";
        model = root / "model.ukg";

        SynthOptions so;
        so.config.entities = 20;
        so.config.relations = 2;
        so.config.facts = 120;
        so.config.transitive_relation = 0;
        so.config.seed = 33;
        so.out_file = raw;
        std::ostringstream sink;
        cmd_synth(so, sink);

        IngestOptions io;
        io.triples_file = raw;
        io.out_dir = split_dir;
        io.seed = 5;
        cmd_ingest(io, sink);

        TrainOptions to;
        to.split_dir = split_dir;
        to.out_model = model;
        to.overrides = {"dimension=8", "max-epochs=25", "batch-size=32", "seed=2"};
        cmd_train(to, sink);
    }
};

CliFixture& fixture() {
    static CliFixture fx;
    return fx;
}

}  // namespace

TEST_CASE("synth writes a parseable corpus and a checkable manifest") {
    auto& fx = fixture();
    std::ostringstream out;
    SynthOptions so;
    so.config.entities = 10;
    so.config.relations = 2;
    so.config.facts = 40;
    so.config.seed = 9;
    so.out_file = fx.root / "synth-small.tsv";
    cmd_synth(so, out);
    CHECK(contains(out.str(), "synth:"));
    CHECK(contains(out.str(), "10 entities"));

    Vocabulary vocab;
    auto triples = parse_triples_file(so.out_file.string(), vocab);
    CHECK(triples.size() >= 40);  // closure may add facts
    for (const auto& wt : triples) {
        CHECK(wt.score >= 0.0);
        CHECK(wt.score <= 1.0);
    }
    CHECK(check_manifest_outputs(fx.root / "synth-small.tsv.manifest.json"));
}

TEST_CASE("ingest splits deterministically") {
    auto& fx = fixture();
    std::ostringstream out;

    SUBCASE("same seed gives byte-identical artifacts") {
        IngestOptions a;
        a.triples_file = fx.raw;
        a.out_dir = fx.root / "split-a";
        a.seed = 5;
        cmd_ingest(a, out);
        IngestOptions b = a;
        b.out_dir = fx.root / "split-b";
        cmd_ingest(b, out);
        for (const char* name : {"train.tsv", "valid.tsv", "test.tsv", "test_negatives.tsv",
                                 "entities.txt", "relations.txt"})
            CHECK(read_bytes(a.out_dir / name) == read_bytes(b.out_dir / name));
    }

    SUBCASE("train-only ratios leave validation and test empty") {
        IngestOptions o;
        o.triples_file = fx.raw;
        o.out_dir = fx.root / "split-all-train";
        o.ratios = {1.0, 0.0, 0.0};
        cmd_ingest(o, out);
        auto loaded = load_split(o.out_dir);
        CHECK(!loaded.split.train.empty());
        CHECK(loaded.split.validation.empty());
        CHECK(loaded.split.test.empty());
        CHECK(loaded.split.test_negatives.empty());
    }

    SUBCASE("summary reports the split sizes") {
        IngestOptions o;
        o.triples_file = fx.raw;
        o.out_dir = fx.root / "split-c";
        std::ostringstream s;
        cmd_ingest(o, s);
        CHECK(contains(s.str(), "ingest:"));
        CHECK(contains(s.str(), "train/valid/test/negatives:"));
        CHECK(contains(s.str(), "20 entities"));
    }

    SUBCASE("missing input file is an error") {
        IngestOptions o;
        o.triples_file = fx.root / "nope.tsv";
        o.out_dir = fx.root / "split-missing";
        CHECK_THROWS(cmd_ingest(o, out));
    }
}

TEST_CASE("rule mining finds the planted transitive relation") {
    auto& fx = fixture();
    std::ostringstream out;

    SUBCASE("planted chain rule ranks first and the emitted file binds") {
        MineRulesOptions o;
        o.split_dir = fx.split_dir;
        o.out_file = fx.root / "mined.tsv";
        o.min_support = 2;
        o.min_hit_ratio = 0.2;
        o.emit_rules = fx.root / "rules.txt";
        cmd_mine_rules(o, out);
        CHECK(contains(out.str(), "mine-rules:"));
        CHECK(contains(out.str(), "chain:r0,r0=>r0"));  // best hit ratio

        auto report = read_bytes(o.out_file);
        CHECK(contains(report, "# pattern\trule\tsupport\thits\thit_ratio\tsampled"));
        CHECK(contains(report, "chain"));

        auto rules = parse_rules_file(o.emit_rules->string());
        REQUIRE(!rules.empty());
        auto loaded = load_split(fx.split_dir);
        CHECK(bind_rules(rules, loaded.vocab).size() == rules.size());
        CHECK(check_manifest_outputs(fs::path(o.out_file.string() + ".manifest.json")));
    }

    SUBCASE("an impossible support threshold leaves the report empty") {
        MineRulesOptions o;
        o.split_dir = fx.split_dir;
        o.out_file = fx.root / "mined-none.tsv";
        o.min_support = 1000000;
        std::ostringstream s;
        cmd_mine_rules(o, s);
        CHECK(contains(s.str(), "0 candidate rules"));
        auto lines = read_bytes(o.out_file);
        CHECK(lines == "# pattern\trule\tsupport\thits\thit_ratio\tsampled\n");
    }
}

TEST_CASE("train command artifacts") {
    auto& fx = fixture();
    std::ostringstream out;

    SUBCASE("writes model, log and manifest that verify") {
        CHECK(fs::exists(fx.model));
        CHECK(fs::exists(fx.root / "model.ukg.log"));
        CHECK(check_manifest_outputs(fx.root / "model.ukg.manifest.json"));
        auto m = load_model(fx.model);
        CHECK(m.dim == 8);
        CHECK(m.entity_count() == 20);
    }

    SUBCASE("disabling negatives zeroes the j_neg column") {
        TrainOptions o;
        o.split_dir = fx.split_dir;
        o.out_model = fx.root / "model-nn.ukg";
        o.overrides = {"dimension=4", "max-epochs=6", "eval-every=1", "ablation=no-negatives"};
        cmd_train(o, out);
        std::ifstream log(fx.root / "model-nn.ukg.log");
        std::string header;
        std::getline(log, header);
        CHECK(contains(header, "j_neg"));
        std::vector<std::string> cols;
        {
            std::istringstream hs(header);
            for (std::string c; std::getline(hs, c, '\t');) cols.push_back(c);
        }
        std::size_t j_neg_col = 0;
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == "j_neg") j_neg_col = i;
        bool any_row = false;
        for (std::string line; std::getline(log, line);) {
            std::istringstream ls(line);
            std::vector<std::string> vals;
            for (std::string c; std::getline(ls, c, '\t');) vals.push_back(c);
            REQUIRE(vals.size() == cols.size());
            CHECK(std::stod(vals[j_neg_col]) == 0.0);
            any_row = true;
        }
        CHECK(any_row);
    }

    SUBCASE("export-text writes a readable dump") {
        TrainOptions o;
        o.split_dir = fx.split_dir;
        o.out_model = fx.root / "model-txt.ukg";
        o.overrides = {"dimension=4", "max-epochs=3"};
        o.export_text = true;
        cmd_train(o, out);
        auto text = read_bytes(fx.root / "model-txt.ukg.txt");
        CHECK(contains(text, "e0"));  // entity names appear
        CHECK(contains(text, "r0"));
    }

    SUBCASE("rules naming an unknown relation fail before training") {
        auto rules_path = fx.root / "bad-rules.txt";
        std::ofstream(rules_path) << "(A, r9, B) & (B, r9, C) => (A, r9, C)\n";
        TrainOptions o;
        o.split_dir = fx.split_dir;
        o.out_model = fx.root / "model-bad.ukg";
        o.rules_file = rules_path;
        CHECK_THROWS_AS(cmd_train(o, out), ValidationError);
        CHECK(!fs::exists(fx.root / "model-bad.ukg"));
    }

    SUBCASE("resume rejects a conflicting dimension") {
        TrainOptions o;
        o.split_dir = fx.split_dir;
        o.out_model = fx.root / "model-resume.ukg";
        o.overrides = {"dimension=16", "max-epochs=2"};
        o.resume = fx.model;  // trained at dimension 8
        CHECK_THROWS_WITH_AS(cmd_train(o, out),
                             doctest::Contains("resume model has dimension 8"), ValidationError);
    }

    SUBCASE("resume continues from the saved model") {
        TrainOptions o;
        o.split_dir = fx.split_dir;
        o.out_model = fx.root / "model-resumed.ukg";
        o.overrides = {"dimension=8", "max-epochs=2", "seed=2"};
        o.resume = fx.model;
        cmd_train(o, out);
        auto resumed = load_model(o.out_model);
        auto base = load_model(fx.model);
        CHECK(resumed.entities != base.entities);  // moved on from the snapshot
        CHECK(resumed.dim == base.dim);
    }

    SUBCASE("bad override keys are rejected") {
        TrainOptions o;
        o.split_dir = fx.split_dir;
        o.out_model = fx.root / "model-badkey.ukg";
        o.overrides = {"dimenshun=8"};
        CHECK_THROWS_AS(cmd_train(o, out), ValidationError);
    }
}

TEST_CASE("eval command") {
    auto& fx = fixture();
    std::ostringstream out;

    SUBCASE("full report carries all six headline metrics") {
        EvalOptionsCli o;
        o.model_file = fx.model;
        o.split_dir = fx.split_dir;
        o.out_prefix = fx.root / "report";
        cmd_eval(o, out);
        auto txt = read_bytes(fx.root / "report.txt");
        for (const char* key : {"mse\t", "mae\t", "ndcg-linear\t", "ndcg-exp\t", "f1\t",
                                "accuracy\t", "mse-observed\t", "mae-observed\t"})
            CHECK(contains(txt, key));
        auto j = nlohmann::json::parse(read_bytes(fx.root / "report.json"));
        CHECK(j.contains("confidence"));
        CHECK(j.contains("ranking"));
        CHECK(j.contains("classification"));
        CHECK(j["confidence"]["mse"].get<double>() >= 0.0);
        CHECK(j["ranking"]["ndcg-linear"].get<double>() <= 1.0 + 1e-12);
        CHECK(check_manifest_outputs(fx.root / "report.manifest.json"));
    }

    SUBCASE("task selection trims the report") {
        EvalOptionsCli o;
        o.model_file = fx.model;
        o.split_dir = fx.split_dir;
        o.tasks = {"confidence"};
        o.out_prefix = fx.root / "report-conf";
        cmd_eval(o, out);
        auto txt = read_bytes(fx.root / "report-conf.txt");
        CHECK(contains(txt, "mse\t"));
        CHECK(!contains(txt, "ndcg-linear"));
        CHECK(!contains(txt, "f1"));

        o.tasks = {"plausibility"};
        CHECK_THROWS_WITH_AS(cmd_eval(o, out), doctest::Contains("unknown task"),
                             ValidationError);
    }

    SUBCASE("repeat runs produce identical reports") {
        EvalOptionsCli o;
        o.model_file = fx.model;
        o.split_dir = fx.split_dir;
        o.out_prefix = fx.root / "rep-a";
        cmd_eval(o, out);
        auto first_txt = read_bytes(fx.root / "rep-a.txt");
        auto first_json = read_bytes(fx.root / "rep-a.json");
        o.out_prefix = fx.root / "rep-b";
        cmd_eval(o, out);
        CHECK(read_bytes(fx.root / "rep-b.txt") == first_txt);
        CHECK(read_bytes(fx.root / "rep-b.json") == first_json);
    }

    SUBCASE("per-query dump lists every ranking query") {
        EvalOptionsCli o;
        o.model_file = fx.model;
        o.split_dir = fx.split_dir;
        o.out_prefix = fx.root / "report-dump";
        o.per_query_dump = fx.root / "queries.tsv";
        cmd_eval(o, out);
        auto dump = read_bytes(*o.per_query_dump);
        CHECK(contains(dump, "# head\trelation\trelevant\tndcg_linear\tndcg_exp"));
        auto loaded = load_split(fx.split_dir);
        auto queries = build_rank_queries(loaded.split, true);
        CHECK(std::count(dump.begin(), dump.end(), '\n') == std::ptrdiff_t(queries.size() + 1));
    }

    SUBCASE("tampered split artifacts are refused") {
        fs::path dir = fx.root / "split-tamper";
        IngestOptions io;
        io.triples_file = fx.raw;
        io.out_dir = dir;
        io.seed = 5;
        cmd_ingest(io, out);
        TrainOptions to;
        to.split_dir = dir;
        to.out_model = fx.root / "model-tamper.ukg";
        to.overrides = {"dimension=4", "max-epochs=2"};
        cmd_train(to, out);
        {
            std::ofstream f(dir / "test.tsv", std::ios::app);
            f << "e0\tr0\te1\t0.999\n";
        }
        EvalOptionsCli o;
        o.model_file = fx.root / "model-tamper.ukg";
        o.split_dir = dir;
        o.out_prefix = fx.root / "report-tamper";
        CHECK_THROWS_WITH_AS(cmd_eval(o, out), doctest::Contains("manifest digest"),
                             ValidationError);
    }

    SUBCASE("model trained elsewhere is refused on vocabulary mismatch") {
        SynthOptions so;
        so.config.entities = 9;
        so.config.relations = 2;
        so.config.facts = 30;
        so.config.seed = 77;
        so.out_file = fx.root / "other.tsv";
        cmd_synth(so, out);
        IngestOptions io;
        io.triples_file = so.out_file;
        io.out_dir = fx.root / "other-split";
        cmd_ingest(io, out);
        EvalOptionsCli o;
        o.model_file = fx.model;
        o.split_dir = fx.root / "other-split";
        o.out_prefix = fx.root / "report-other";
        CHECK_THROWS_WITH_AS(cmd_eval(o, out), doctest::Contains("different vocabulary"),
                             ValidationError);
    }
}

TEST_CASE("predict command") {
    auto& fx = fixture();

    SUBCASE("full triple prints the confidence and any observed score") {
        PredictOptions o;
        o.model_file = fx.model;
        o.split_dir = fx.split_dir;
        auto loaded = load_split(fx.split_dir);
        const auto& wt = loaded.split.train.front();
        o.head = loaded.vocab.entity_name(wt.head);
        o.relation = loaded.vocab.relation_name(wt.relation);
        o.tail = loaded.vocab.entity_name(wt.tail);
        std::ostringstream s;
        cmd_predict(o, s);
        std::istringstream lines(s.str());
        std::string first, second;
        std::getline(lines, first);
        std::getline(lines, second);
        const double conf = std::stod(first);
        CHECK(conf >= 0.0);
        CHECK(conf <= 1.0);
        CHECK(contains(second, "observed\t" + format_double(wt.score)));
    }

    SUBCASE("ranked table clamps top-k to the vocabulary size") {
        PredictOptions o;
        o.model_file = fx.model;
        o.split_dir = fx.split_dir;
        o.head = "e0";
        o.relation = "r0";
        o.top_k = 1000;
        std::ostringstream s;
        cmd_predict(o, s);
        auto text = s.str();
        CHECK(contains(text, "rank\ttail\tconfidence\tobserved"));
        CHECK(std::count(text.begin(), text.end(), '\n') == 21);  // header + 20 entities

        o.top_k = 3;
        std::ostringstream s3;
        cmd_predict(o, s3);
        const auto text3 = s3.str();
        CHECK(std::count(text3.begin(), text3.end(), '\n') == 4);
    }

    SUBCASE("ranking is sorted by confidence descending") {
        PredictOptions o;
        o.model_file = fx.model;
        o.split_dir = fx.split_dir;
        o.head = "e1";
        o.relation = "r1";
        o.top_k = 20;
        std::ostringstream s;
        cmd_predict(o, s);
        std::istringstream lines(s.str());
        std::string line;
        std::getline(lines, line);  // header
        double prev = 2.0;
        while (std::getline(lines, line)) {
            std::istringstream ls(line);
            std::string rank, tail, conf;
            std::getline(ls, rank, '\t');
            std::getline(ls, tail, '\t');
            std::getline(ls, conf, '\t');
            CHECK(std::stod(conf) <= prev);
            prev = std::stod(conf);
        }
    }

    SUBCASE("unknown names fail with suggestions") {
        PredictOptions o;
        o.model_file = fx.model;
        o.split_dir = fx.split_dir;
        o.head = "e01";  // close to e0 / e1
        o.relation = "r0";
        std::ostringstream s;
        CHECK_THROWS_WITH_AS(cmd_predict(o, s), doctest::Contains("nearest names"),
                             ValidationError);
        try {
            cmd_predict(o, s);
        } catch (const ValidationError& e) {
            CHECK(contains(e.what(), "e0"));
        }
        o.head = "e0";
        o.relation = "rel0";
        CHECK_THROWS_WITH_AS(cmd_predict(o, s), doctest::Contains("unknown relation"),
                             ValidationError);
    }
}

TEST_CASE("manifest verification states") {
    auto& fx = fixture();
    CHECK(!check_manifest_outputs(fx.root / "does-not-exist.json"));
    CHECK(check_manifest_outputs(fx.split_dir / "manifest.json"));

    fs::path bad = fx.root / "broken-manifest.json";
    std::ofstream(bad) << "{ not json";
    CHECK_THROWS_AS(check_manifest_outputs(bad), ValidationError);

    fs::path no_outputs = fx.root / "no-outputs.json";
    std::ofstream(no_outputs) << "{\"tool\": \"ukg\"}";
    CHECK_THROWS_WITH_AS(check_manifest_outputs(no_outputs), doctest::Contains("no outputs"),
                         ValidationError);
}
