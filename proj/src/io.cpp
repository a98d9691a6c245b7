#include "ukg/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace ukg {

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::uint64_t fnv1a64_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file for digest: " + path.string());
    char buf[65536];
    std::uint64_t h = 0xcbf29ce484222325ull;
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a64(buf, std::size_t(in.gcount()), h);
    return h;
}

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw ValidationError("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw ValidationError("cannot open for reading: " + path.string());
    return in;
}

void check_tsv_safe(const std::vector<std::string>& names, const char* what) {
    for (const auto& n : names)
        if (n.find('\t') != std::string::npos || n.find('\n') != std::string::npos ||
            n.find('\r') != std::string::npos)
            throw ValidationError(std::string(what) + " name contains tab or newline: " + n);
}

}  // namespace

void save_triples_tsv(const fs::path& path, const std::vector<WeightedTriple>& triples,
                      const Vocabulary& vocab) {
    auto out = open_out(path);
    for (const auto& t : triples)
        out << vocab.entity_name(t.head) << '\t' << vocab.relation_name(t.relation) << '\t'
            << vocab.entity_name(t.tail) << '\t' << format_double(t.score) << '\n';
    out.flush();
    if (!out) throw ValidationError("write failed: " + path.string());
}

std::vector<WeightedTriple> load_triples_tsv(const fs::path& path, const Vocabulary& vocab) {
    auto in = open_in(path);
    std::vector<WeightedTriple> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        std::array<std::string, 4> fields;
        std::size_t start = 0;
        int nf = 0;
        while (nf < 4) {
            std::size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields[nf++] = line.substr(start);
                start = line.size() + 1;
                break;
            }
            fields[nf++] = line.substr(start, tab - start);
            start = tab + 1;
        }
        if (nf != 4 || start <= line.size())
            throw ParseError("expected exactly 4 tab-separated fields", lineno);

        auto h = vocab.entity_id(fields[0]);
        auto r = vocab.relation_id(fields[1]);
        auto t = vocab.entity_id(fields[2]);
        if (!h) throw ParseError("unknown entity '" + fields[0] + "'", lineno);
        if (!r) throw ParseError("unknown relation '" + fields[1] + "'", lineno);
        if (!t) throw ParseError("unknown entity '" + fields[2] + "'", lineno);

        double score;
        try {
            std::size_t pos = 0;
            score = std::stod(fields[3], &pos);
            if (pos != fields[3].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ParseError("non-numeric score '" + fields[3] + "'", lineno);
        }
        if (!(score >= 0.0 && score <= 1.0))
            throw ParseError("stored score outside [0, 1]", lineno);

        out.push_back({*h, *r, *t, score});
    }
    return out;
}

namespace {

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

std::uint64_t parse_hex64(const std::string& s, const char* what) {
    if (s.size() != 16) throw ValidationError(std::string("bad hash field: ") + what);
    return std::stoull(s, nullptr, 16);
}

void save_names(const fs::path& path, const std::vector<std::string>& names) {
    auto out = open_out(path);
    for (const auto& n : names) out << n << '\n';
    out.flush();
    if (!out) throw ValidationError("write failed: " + path.string());
}

std::vector<std::string> load_names(const fs::path& path) {
    auto in = open_in(path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        names.push_back(line);
    }
    return names;
}

}  // namespace

void save_split(const fs::path& dir, const DatasetSplit& split, const Vocabulary& vocab,
                const SplitMetadata& meta) {
    check_tsv_safe(vocab.entity_names(), "entity");
    check_tsv_safe(vocab.relation_names(), "relation");
    fs::create_directories(dir);

    save_triples_tsv(dir / "train.tsv", split.train, vocab);
    save_triples_tsv(dir / "valid.tsv", split.validation, vocab);
    save_triples_tsv(dir / "test.tsv", split.test, vocab);
    save_triples_tsv(dir / "test_negatives.tsv", split.test_negatives, vocab);
    save_names(dir / "entities.txt", vocab.entity_names());
    save_names(dir / "relations.txt", vocab.relation_names());

    json j;
    j["seed"] = meta.seed;
    j["ratios"] = {{"train", meta.ratios.train},
                   {"validation", meta.ratios.validation},
                   {"test", meta.ratios.test}};
    j["tau"] = meta.tau;
    j["normalization"] = meta.normalization.to_string();
    j["dropped-duplicates"] = meta.dropped_duplicates;
    j["entity-count"] = vocab.entity_count();
    j["relation-count"] = vocab.relation_count();
    j["entity-hash"] = hex64(vocab.entity_hash());
    j["relation-hash"] = hex64(vocab.relation_hash());

    auto out = open_out(dir / "metadata.json");
    out << j.dump(2) << '\n';
    out.flush();
    if (!out) throw ValidationError("write failed: " + (dir / "metadata.json").string());
}

LoadedSplit load_split(const fs::path& dir) {
    auto meta_in = open_in(dir / "metadata.json");
    json j;
    try {
        meta_in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("bad metadata.json in " + dir.string() + ": " + e.what());
    }

    LoadedSplit loaded;
    try {
        loaded.meta.seed = j.at("seed").get<std::uint64_t>();
        loaded.meta.ratios.train = j.at("ratios").at("train").get<double>();
        loaded.meta.ratios.validation = j.at("ratios").at("validation").get<double>();
        loaded.meta.ratios.test = j.at("ratios").at("test").get<double>();
        loaded.meta.tau = j.at("tau").get<double>();
        loaded.meta.normalization = NormalizeMethod::from_string(j.at("normalization").get<std::string>());
        loaded.meta.dropped_duplicates = j.at("dropped-duplicates").get<std::size_t>();
    } catch (const json::exception& e) {
        throw ValidationError("metadata.json is missing fields: " + std::string(e.what()));
    }

    for (const auto& name : load_names(dir / "entities.txt")) loaded.vocab.add_entity(name);
    for (const auto& name : load_names(dir / "relations.txt")) loaded.vocab.add_relation(name);

    if (loaded.vocab.entity_count() != j.at("entity-count").get<std::size_t>() ||
        loaded.vocab.relation_count() != j.at("relation-count").get<std::size_t>() ||
        loaded.vocab.entity_hash() != parse_hex64(j.at("entity-hash").get<std::string>(), "entity-hash") ||
        loaded.vocab.relation_hash() !=
            parse_hex64(j.at("relation-hash").get<std::string>(), "relation-hash"))
        throw ValidationError("split vocabulary does not match its metadata in " + dir.string());

    loaded.split.train = load_triples_tsv(dir / "train.tsv", loaded.vocab);
    loaded.split.validation = load_triples_tsv(dir / "valid.tsv", loaded.vocab);
    loaded.split.test = load_triples_tsv(dir / "test.tsv", loaded.vocab);
    loaded.split.test_negatives = load_triples_tsv(dir / "test_negatives.tsv", loaded.vocab);
    return loaded;
}

namespace {

constexpr char kModelMagic[8] = {'U', 'K', 'G', 'M', 'O', 'D', 'L', '1'};
constexpr std::uint32_t kEndianTag = 0x01020304u;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void read_pod(std::istream& in, T& v, const char* what) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ValidationError(std::string("truncated model file while reading ") + what);
}

}  // namespace

void save_model(const fs::path& path, const ModelParams& params) {
    if (params.dim == 0) throw ValidationError("refusing to save a model with dimension 0");
    auto out = open_out(path, std::ios::binary);
    out.write(kModelMagic, sizeof kModelMagic);
    write_pod(out, kEndianTag);
    write_pod(out, std::uint32_t(params.dim));
    write_pod(out, std::uint8_t(params.variant == Variant::Logistic ? 0 : 1));
    write_pod(out, std::uint64_t(params.entity_count()));
    write_pod(out, std::uint64_t(params.relation_count()));
    write_pod(out, params.entity_vocab_hash);
    write_pod(out, params.relation_vocab_hash);
    write_pod(out, params.map_weight);
    write_pod(out, params.map_bias);
    out.write(reinterpret_cast<const char*>(params.entities.data()),
              std::streamsize(params.entities.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(params.relations.data()),
              std::streamsize(params.relations.size() * sizeof(double)));
    out.flush();
    if (!out) throw ValidationError("write failed: " + path.string());
}

ModelParams load_model(const fs::path& path) {
    auto in = open_in(path, std::ios::binary);

    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kModelMagic, sizeof magic) != 0)
        throw ValidationError("not a model file: " + path.string());

    std::uint32_t endian, dim32;
    std::uint8_t variant8;
    std::uint64_t n_entities, n_relations;
    read_pod(in, endian, "byte-order tag");
    if (endian != kEndianTag)
        throw ValidationError("model file has an incompatible byte order: " + path.string());
    read_pod(in, dim32, "dimension");
    read_pod(in, variant8, "variant");
    read_pod(in, n_entities, "entity count");
    read_pod(in, n_relations, "relation count");
    if (dim32 == 0 || dim32 > (1u << 20))
        throw ValidationError("model file has an implausible dimension");
    if (variant8 > 1) throw ValidationError("model file has an unknown variant tag");
    if (n_entities > (1ull << 32) || n_relations > (1ull << 32))
        throw ValidationError("model file has implausible matrix sizes");

    ModelParams params;
    params.dim = dim32;
    params.variant = variant8 == 0 ? Variant::Logistic : Variant::Rectifier;
    read_pod(in, params.entity_vocab_hash, "entity vocabulary hash");
    read_pod(in, params.relation_vocab_hash, "relation vocabulary hash");
    read_pod(in, params.map_weight, "map weight");
    read_pod(in, params.map_bias, "map bias");

    params.entities.resize(std::size_t(n_entities) * dim32);
    params.relations.resize(std::size_t(n_relations) * dim32);
    in.read(reinterpret_cast<char*>(params.entities.data()),
            std::streamsize(params.entities.size() * sizeof(double)));
    if (!in) throw ValidationError("truncated model file while reading entity matrix");
    in.read(reinterpret_cast<char*>(params.relations.data()),
            std::streamsize(params.relations.size() * sizeof(double)));
    if (!in) throw ValidationError("truncated model file while reading relation matrix");
    if (in.peek() != std::char_traits<char>::eof())
        throw ValidationError("model file has trailing bytes: " + path.string());
    return params;
}

void export_model_text(const fs::path& path, const ModelParams& params, const Vocabulary& vocab) {
    if (vocab.entity_count() != params.entity_count() ||
        vocab.relation_count() != params.relation_count())
        throw ValidationError("vocabulary size does not match the model matrices");

    auto out = open_out(path);
    out << "# variant " << variant_name(params.variant) << '\n';
    out << "# dimension " << params.dim << '\n';
    out << "# entities " << params.entity_count() << '\n';
    out << "# relations " << params.relation_count() << '\n';
    out << "# map-weight " << format_double(params.map_weight) << '\n';
    out << "# map-bias " << format_double(params.map_bias) << '\n';
    for (std::size_t e = 0; e < params.entity_count(); ++e) {
        out << "entity\t" << vocab.entity_name(EntityId(e));
        for (double v : params.entity(EntityId(e))) out << '\t' << format_double(v);
        out << '\n';
    }
    for (std::size_t r = 0; r < params.relation_count(); ++r) {
        out << "relation\t" << vocab.relation_name(RelationId(r));
        for (double v : params.relation(RelationId(r))) out << '\t' << format_double(v);
        out << '\n';
    }
    out.flush();
    if (!out) throw ValidationError("write failed: " + path.string());
}

void save_train_log(const fs::path& path, const std::vector<EvalRecord>& log) {
    auto out = open_out(path);
    out << "# epoch\ttrain_loss\tj_pos\tj_neg\treg\tval_mse\n";
    for (const auto& rec : log) {
        out << rec.epoch << '\t' << format_double(rec.train_loss) << '\t'
            << format_double(rec.j_pos) << '\t' << format_double(rec.j_neg) << '\t'
            << format_double(rec.reg) << '\t'
            << (rec.val_mse ? format_double(*rec.val_mse) : std::string("-")) << '\n';
    }
    out.flush();
    if (!out) throw ValidationError("write failed: " + path.string());
}

namespace {

double to_real(const std::string& v) {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
    return x;
}

std::size_t to_count(const std::string& v) {
    std::size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    if (x < 0) throw std::invalid_argument("negative value");
    return std::size_t(x);
}

std::uint64_t to_seed(const std::string& v) {
    std::size_t pos = 0;
    unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
}

using Setter = std::function<void(TrainConfig&, const std::string&)>;

const std::map<std::string, Setter>& config_setters() {
    static const std::map<std::string, Setter> setters = {
        {"learning-rate", [](TrainConfig& c, const std::string& v) { c.learning_rate = to_real(v); }},
        {"dimension", [](TrainConfig& c, const std::string& v) { c.dimension = to_count(v); }},
        {"batch-size", [](TrainConfig& c, const std::string& v) { c.batch_size = to_count(v); }},
        {"l2-lambda", [](TrainConfig& c, const std::string& v) { c.l2_lambda = to_real(v); }},
        {"negatives-per-positive",
         [](TrainConfig& c, const std::string& v) { c.negatives_per_positive = int(to_count(v)); }},
        {"variant", [](TrainConfig& c, const std::string& v) { c.variant = variant_from_string(v); }},
        {"ablation", [](TrainConfig& c, const std::string& v) { c.ablation = ablation_from_string(v); }},
        {"adam-beta1", [](TrainConfig& c, const std::string& v) { c.adam_beta1 = to_real(v); }},
        {"adam-beta2", [](TrainConfig& c, const std::string& v) { c.adam_beta2 = to_real(v); }},
        {"epsilon", [](TrainConfig& c, const std::string& v) { c.epsilon = to_real(v); }},
        {"max-epochs", [](TrainConfig& c, const std::string& v) { c.max_epochs = to_count(v); }},
        {"eval-every", [](TrainConfig& c, const std::string& v) { c.eval_every = to_count(v); }},
        {"patience", [](TrainConfig& c, const std::string& v) { c.patience = to_count(v); }},
        {"seed", [](TrainConfig& c, const std::string& v) { c.seed = to_seed(v); }},
    };
    return setters;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::string known_keys() {
    std::string out;
    for (const auto& [k, _] : config_setters()) {
        if (!out.empty()) out += ", ";
        out += k;
    }
    return out;
}

}  // namespace

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;

        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value'", lineno);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        auto it = config_setters().find(key);
        if (it == config_setters().end())
            throw ParseError("unknown config key '" + key + "' (known: " + known_keys() + ")",
                             lineno);
        try {
            it->second(config, value);
        } catch (const std::exception& e) {
            throw ParseError("bad value for '" + key + "': " + e.what(), lineno);
        }
    }
    return config;
}

TrainConfig load_train_config(const fs::path& path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_train_config(ss.str());
}

void apply_override(TrainConfig& config, const std::string& key_equals_value) {
    std::size_t eq = key_equals_value.find('=');
    if (eq == std::string::npos)
        throw ValidationError("override must look like key=value: " + key_equals_value);
    std::string key = trim(key_equals_value.substr(0, eq));
    std::string value = trim(key_equals_value.substr(eq + 1));
    auto it = config_setters().find(key);
    if (it == config_setters().end())
        throw ValidationError("unknown config key '" + key + "' (known: " + known_keys() + ")");
    try {
        it->second(config, value);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError("bad value for '" + key + "': " + e.what());
    }
}

}  // namespace ukg
