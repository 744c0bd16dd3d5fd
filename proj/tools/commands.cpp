// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xmr/answers.hpp"
#include "xmr/config.hpp"
#include "xmr/corpus.hpp"
#include "xmr/embedstore.hpp"
#include "xmr/evalir.hpp"
#include "xmr/fusion.hpp"
#include "xmr/search.hpp"
#include "xmr/train.hpp"
#include "xmr/trec.hpp"

namespace xmr::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

int exit_code(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::usage: return 2;
        case ErrorCategory::io: return 3;
        case ErrorCategory::format: return 4;
        case ErrorCategory::validation: return 5;
        case ErrorCategory::numeric: return 6;
    }
    return 1;
}

namespace {

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw io_error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 15]);
    }
    return out;
}

std::string option_key(const CLI::Option* opt) {
    std::string name = opt->get_name();
    while (!name.empty() && name.front() == '-') name.erase(name.begin());
    return name;
}

// Output directory, inputs and artifacts of one command invocation.
class Session {
public:
    Session(const CLI::App& sub, fs::path out, std::size_t threads)
        : sub_(sub), out_(std::move(out)), threads_(threads) {
        std::error_code ec;
        fs::create_directories(out_, ec);
        if (ec || !fs::is_directory(out_)) throw io_error("cannot create output directory '" + out_.string() + "'");
    }

    std::size_t threads() const { return threads_; }

    const fs::path& input(const fs::path& path) {
        inputs_.push_back(path);
        return path;
    }

    const fs::path& embeddings_input(const fs::path& path) {
        inputs_.push_back(sidecar_path(path));
        return input(path);
    }

    fs::path artifact(const std::string& name) {
        artifacts_.push_back(name);
        return out_ / name;
    }

    void write(const std::string& name, std::string_view bytes) { detail::write_file(artifact(name), bytes); }

    /// Writes manifest.json. The config hash covers the command and every
    /// argument except --out/--threads, with input paths replaced by the
    /// SHA-256 of their content.
    void finish(std::optional<std::uint64_t> seed = std::nullopt) {
        json inputs = json::object();
        std::map<std::string, std::string> digests;
        for (const auto& p : inputs_) {
            digests[p.string()] = sha256_hex(detail::read_file(p));
            inputs[p.string()] = digests[p.string()];
        }
        auto content_ref = [&](const std::string& v) {
            if (auto it = digests.find(v); it != digests.end()) return "sha256:" + it->second;
            if (auto eq = v.find('='); eq != std::string::npos) {
                if (auto it = digests.find(v.substr(eq + 1)); it != digests.end())
                    return v.substr(0, eq + 1) + "sha256:" + it->second;
            }
            return v;
        };
        json args = json::object();
        json hashed_args = json::object();
        for (const CLI::Option* opt : sub_.get_options()) {
            if (opt == sub_.get_help_ptr()) continue;
            const std::string key = option_key(opt);
            std::vector<std::string> values;
            if (opt->count() > 0) {
                values = opt->results();
                if (values.empty()) values.push_back("true");
            } else if (!opt->get_default_str().empty()) {
                values.push_back(opt->get_default_str());
            } else {
                continue;
            }
            const bool many = opt->get_expected_max() > 1;
            args[key] = many ? json(values) : json(values.back());
            if (key == "out" || key == "threads") continue;
            for (auto& v : values) v = content_ref(v);
            hashed_args[key] = many ? json(values) : json(values.back());
        }
        json outputs = json::object();
        for (const auto& name : artifacts_) outputs[name] = sha256_hex(detail::read_file(out_ / name));
        const json config{{"command", sub_.get_name()}, {"args", hashed_args}};

        json manifest;
        manifest["command"] = sub_.get_name();
        manifest["version"] = XMR_VERSION;
        manifest["args"] = args;
        manifest["config_hash"] = sha256_hex(config.dump());
        manifest["seed"] = seed ? json(*seed) : json(nullptr);
        manifest["threads"] = threads_;
        manifest["inputs"] = inputs;
        manifest["outputs"] = outputs;
        detail::write_file(out_ / "manifest.json", manifest.dump(2) + "\n");
    }

private:
    const CLI::App& sub_;
    fs::path out_;
    std::size_t threads_;
    std::vector<fs::path> inputs_;
    std::vector<std::string> artifacts_;
};

struct Common {
    fs::path out;
    std::size_t threads = 1;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out", c.out, "Output directory (created if missing)")->required();
    sub->add_option("--threads", c.threads, "Worker thread cap; 0 uses every core")->check(CLI::NonNegativeNumber);
}

// "name=value" -> (name, value)
std::pair<std::string, std::string> split_named(const std::string& text, const char* what) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
        throw usage_error(std::string(what) + " must look like name=value, got '" + text + "'");
    }
    return {text.substr(0, eq), text.substr(eq + 1)};
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ChannelRuns read_channel_runs(Session& s, const std::vector<std::string>& specs) {
    ChannelRuns runs;
    for (const auto& spec : specs) {
        auto [name, path] = split_named(spec, "--run");
        if (runs.contains(name)) throw usage_error("channel '" + name + "' given twice");
        runs[name] = read_trec_run(s.input(path));
    }
    return runs;
}

std::vector<MetricSpec> parse_metrics(const std::vector<std::string>& names) {
    std::vector<MetricSpec> out;
    for (const auto& n : names) out.push_back(MetricSpec::parse(n));
    return out;
}

// ---------------------------------------------------------------------------

struct ValidateArgs : Common {
    std::vector<fs::path> embeddings, qrels, runs, entity_maps, articles, passages, targets;
};

void run_validate(const CLI::App& sub, const ValidateArgs& a) {
    Session s(sub, a.out, a.threads);
    json report = json::array();
    for (const auto& p : a.embeddings) {
        const auto m = read_embeddings(s.embeddings_input(p));
        report.push_back({{"path", p.string()}, {"kind", "embeddings"}, {"role", to_string(m.role())},
                          {"dim", m.dim()}, {"count", m.count()}, {"normalized", m.normalized()}});
    }
    for (const auto& p : a.qrels) {
        QrelsLoadStats stats;
        const auto q = read_qrels(s.input(p), &stats);
        std::size_t judgments = 0;
        for (const auto& [qid, j] : q.queries()) judgments += j.size();
        report.push_back({{"path", p.string()}, {"kind", "qrels"}, {"queries", q.size()}, {"judgments", judgments},
                          {"zero_grade_lines", stats.zero_grade_lines},
                          {"dropped_queries", stats.queries_without_relevant}});
    }
    for (const auto& p : a.runs) {
        const auto r = read_trec_run(s.input(p));
        std::size_t lines = 0;
        for (const auto& [qid, l] : r.queries) lines += l.size();
        report.push_back({{"path", p.string()}, {"kind", "run"}, {"tag", r.tag}, {"queries", r.queries.size()},
                          {"lines", lines}});
    }
    for (const auto& p : a.entity_maps) {
        const auto m = read_entity_passage_map(s.input(p));
        report.push_back({{"path", p.string()}, {"kind", "entity_map"}, {"entities", m.size()},
                          {"passages", m.passage_count()}});
    }
    for (const auto& p : a.articles) {
        const auto v = read_articles(s.input(p));
        report.push_back({{"path", p.string()}, {"kind", "articles"}, {"count", v.size()}});
    }
    for (const auto& p : a.passages) {
        const auto v = read_passages(s.input(p));
        report.push_back({{"path", p.string()}, {"kind", "passages"}, {"count", v.size()}});
    }
    for (const auto& p : a.targets) {
        const auto v = read_answer_targets(s.input(p));
        report.push_back({{"path", p.string()}, {"kind", "answer_targets"}, {"count", v.size()}});
    }
    if (report.empty()) throw usage_error("validate: nothing to check; pass at least one file option");
    s.write("validation.json", report.dump(2) + "\n");
    s.finish();
    std::printf("%zu file(s) valid\n", report.size());
}

void add_validate(CLI::App& app) {
    auto a = std::make_shared<ValidateArgs>();
    auto* sub = app.add_subcommand("validate", "Check that input files parse and satisfy their invariants");
    add_common(sub, *a);
    sub->add_option("--embeddings", a->embeddings, "Embedding files (EMB1 + .ids sidecar)");
    sub->add_option("--qrels", a->qrels, "Qrels files");
    sub->add_option("--run", a->runs, "TREC run files");
    sub->add_option("--entity-map", a->entity_maps, "entity<TAB>passage maps");
    sub->add_option("--articles", a->articles, "Article JSON-lines files");
    sub->add_option("--passages", a->passages, "Passage JSON-lines files");
    sub->add_option("--targets", a->targets, "Answer target JSON-lines files");
    sub->callback([sub, a] { run_validate(*sub, *a); });
}

// ---------------------------------------------------------------------------

struct SplitArgs : Common {
    fs::path articles;
    std::size_t limit = kDefaultPassageWords;
};

void run_split(const CLI::App& sub, const SplitArgs& a) {
    Session s(sub, a.out, a.threads);
    const auto articles = read_articles(s.input(a.articles));
    const auto m = build_manifests(articles, a.limit, a.threads);
    write_passages(m.passages, s.artifact("passages.jsonl"));
    write_entity_passage_map(m.entity_passages, s.artifact("entity_passages.tsv"));
    std::vector<std::pair<std::string, std::string>> names, texts;
    for (const auto& n : m.entity_names) names.emplace_back(n.entity_id, n.name);
    for (const auto& p : m.passages) texts.emplace_back(p.passage_id, p.text);
    write_two_column(names, s.artifact("entity_names.tsv"));
    write_two_column(texts, s.artifact("passage_texts.tsv"));
    write_two_column(m.entity_images, s.artifact("entity_images.tsv"));
    s.finish();
    std::printf("%zu entities, %zu passages\n", m.entity_passages.size(), m.passages.size());
}

void add_split(CLI::App& app) {
    auto a = std::make_shared<SplitArgs>();
    auto* sub = app.add_subcommand("split-corpus", "Split articles into passages and write the KB manifests");
    add_common(sub, *a);
    sub->add_option("--articles", a->articles, "Article JSON-lines file")->required();
    sub->add_option("--limit", a->limit, "Maximum words per passage")->check(CLI::PositiveNumber);
    sub->callback([sub, a] { run_split(*sub, *a); });
}

// ---------------------------------------------------------------------------

struct SearchArgs : Common {
    fs::path queries, corpus;
    std::string channel;
    std::size_t k = 100;
    std::string name;
    bool allow_unnormalized = false;
};

void run_search(const CLI::App& sub, const SearchArgs& a) {
    Session s(sub, a.out, a.threads);
    const Channel channel = parse_channel(a.channel);
    const auto q = read_embeddings(s.embeddings_input(a.queries));
    const auto c = read_embeddings(s.embeddings_input(a.corpus));
    SearchOptions o;
    o.threads = a.threads;
    o.require_normalized = !(a.allow_unnormalized || channel == Channel::text);
    const std::string name = a.name.empty() ? std::string(channel_name(channel)) : a.name;
    const auto run = to_run(topk(q, c, a.k, channel, o), name);
    write_trec_run(run, s.artifact(name + ".trec"));
    s.finish();
    std::printf("%zu queries searched against %zu rows\n", q.count(), c.count());
}

void add_search(CLI::App& app) {
    auto a = std::make_shared<SearchArgs>();
    auto* sub = app.add_subcommand("search", "Exact top-k search of one channel");
    add_common(sub, *a);
    sub->add_option("--queries", a->queries, "Query embedding file")->required();
    sub->add_option("--corpus", a->corpus, "Corpus embedding file")->required();
    sub->add_option("--channel", a->channel, "mono, cross or text")->required();
    sub->add_option("--k", a->k, "Results per query")->check(CLI::PositiveNumber);
    sub->add_option("--name", a->name, "Run tag and file stem (defaults to the channel name)");
    sub->add_flag("--allow-unnormalized", a->allow_unnormalized, "Skip the unit-norm check (always off for text)");
    sub->callback([sub, a] { run_search(*sub, *a); });
}

// ---------------------------------------------------------------------------

struct FuseArgs : Common {
    std::vector<std::string> runs, weights;
    fs::path config, entity_map;
    std::string normalization;
    std::size_t pool_k = 0;
    std::size_t k = 100;
    bool broadcast = false;
};

FusionSpec resolve_fusion(Session& s, const FuseArgs& a) {
    KeyValues kv;
    if (!a.config.empty()) kv = read_key_values(s.input(a.config));
    for (const auto& w : a.weights) {
        auto [name, value] = split_named(w, "--weight");
        kv[name] = value;
    }
    if (!a.normalization.empty()) kv["normalization"] = a.normalization;
    if (a.pool_k > 0) kv["pool_k"] = std::to_string(a.pool_k);
    if (!kv.contains("normalization")) {
        // Cosine channels share a scale; a dot-product text channel does not.
        const auto text = kv.find("text");
        kv["normalization"] = text != kv.end() && text->second != "0" ? "min_max" : "none";
    }
    return fusion_spec_from(kv);
}

void run_fuse(const CLI::App& sub, const FuseArgs& a) {
    Session s(sub, a.out, a.threads);
    if (a.broadcast && a.entity_map.empty()) throw usage_error("--broadcast needs --entity-map");
    const auto runs = read_channel_runs(s, a.runs);
    const auto spec = resolve_fusion(s, a);
    auto fused = fuse(runs, spec, a.k);
    fused.tag = "fused";
    write_trec_run(fused, s.artifact("fused.trec"));
    s.write("fusion.cfg", format_fusion_spec(spec));
    if (a.broadcast) {
        const auto map = read_entity_passage_map(s.input(a.entity_map));
        write_trec_run(broadcast_to_passages(fused, map), s.artifact("fused_passages.trec"));
    }
    s.finish();
    std::printf("fused %zu channel(s) over %zu queries\n", runs.size(), fused.queries.size());
}

void add_fuse(CLI::App& app) {
    auto a = std::make_shared<FuseArgs>();
    auto* sub = app.add_subcommand("fuse", "Weighted score fusion of channel runs");
    add_common(sub, *a);
    sub->add_option("--run", a->runs, "Channel run as name=path (repeatable)")->required();
    sub->add_option("--weight", a->weights, "Channel weight as name=value; overrides --config");
    sub->add_option("--config", a->config, "Fusion config (channel = weight, normalization, pool_k)");
    sub->add_option("--normalization", a->normalization, "none, min_max or z_score");
    sub->add_option("--pool-k", a->pool_k, "Per-channel candidates taken into the union");
    sub->add_option("--k", a->k, "Fused results kept per query; 0 keeps all");
    sub->add_option("--entity-map", a->entity_map, "entity<TAB>passage map for --broadcast");
    sub->add_flag("--broadcast", a->broadcast, "Also write the run expanded to passages");
    sub->callback([sub, a] { run_fuse(*sub, *a); });
}

// ---------------------------------------------------------------------------

struct TuneArgs : Common {
    std::vector<std::string> runs;
    fs::path qrels;
    double step = 0.05;
    std::string metric = "mrr@100";
    std::string normalization = "none";
    std::size_t pool_k = 100;
};

void run_tune(const CLI::App& sub, const TuneArgs& a) {
    Session s(sub, a.out, a.threads);
    const auto runs = read_channel_runs(s, a.runs);
    const auto qrels = read_qrels(s.input(a.qrels));
    GridSearchOptions o;
    o.step = a.step;
    o.metric = MetricSpec::parse(a.metric);
    o.normalization = parse_normalization(a.normalization);
    o.candidate_pool_k = a.pool_k;
    o.threads = a.threads;
    const auto result = grid_search_weights(runs, qrels, o);

    s.write("weights.cfg", format_fusion_spec({result.weights, o.normalization, o.candidate_pool_k}));
    std::string grid;
    for (const auto& ch : result.channels) grid += ch + "\t";
    grid += o.metric.name() + "\n";
    for (const auto& p : result.evaluated) {
        for (double w : p.weights) grid += num(w) + "\t";
        grid += num(p.metric) + "\n";
    }
    s.write("grid.tsv", grid);
    json best{{"metric", o.metric.name()}, {"value", result.metric}, {"weights", result.weights},
              {"evaluated", result.evaluated.size()}};
    s.write("best.json", best.dump(2) + "\n");
    s.finish();
    std::printf("best %s = %.6f at", o.metric.name().c_str(), result.metric);
    for (const auto& [ch, w] : result.weights) std::printf(" %s=%g", ch.c_str(), w);
    std::printf("\n");
}

void add_tune(CLI::App& app) {
    auto a = std::make_shared<TuneArgs>();
    auto* sub = app.add_subcommand("tune-weights", "Grid search of fusion weights on the simplex");
    add_common(sub, *a);
    sub->add_option("--run", a->runs, "Channel run as name=path (repeatable)")->required();
    sub->add_option("--qrels", a->qrels, "Validation qrels")->required();
    sub->add_option("--step", a->step, "Grid step; 1/step must be an integer");
    sub->add_option("--metric", a->metric, "Selection metric, e.g. mrr@100 or p@1");
    sub->add_option("--normalization", a->normalization, "none, min_max or z_score");
    sub->add_option("--pool-k", a->pool_k, "Per-channel candidates taken into the union")->check(CLI::PositiveNumber);
    sub->callback([sub, a] { run_tune(*sub, *a); });
}

// ---------------------------------------------------------------------------

struct Embeddings3 {
    fs::path query_images, passage_images, entity_names;
};

void add_embedding_options(CLI::App* sub, Embeddings3& e) {
    sub->add_option("--query-images", e.query_images, "Query image embeddings")->required();
    sub->add_option("--passage-images", e.passage_images, "Reference image embeddings, one row per entity")->required();
    sub->add_option("--entity-names", e.entity_names, "Entity name embeddings, one row per entity")->required();
}

struct TrainArgs : Common {
    Embeddings3 emb;
    fs::path train_pairs, val_pairs, config;
    std::map<std::string, std::string> overrides;
};

void run_train(const CLI::App& sub, const TrainArgs& a) {
    Session s(sub, a.out, a.threads);
    KeyValues kv;
    if (!a.config.empty()) kv = read_key_values(s.input(a.config));
    for (const auto& [key, value] : a.overrides) {
        if (!value.empty()) kv[key] = value;
    }
    auto config = train_config_from(kv);
    config.divergence_dump = a.out / "divergence.xck";

    const auto qi = read_embeddings(s.embeddings_input(a.emb.query_images));
    const auto pi = read_embeddings(s.embeddings_input(a.emb.passage_images));
    const auto en = read_embeddings(s.embeddings_input(a.emb.entity_names));
    const auto train_pairs = read_two_column(s.input(a.train_pairs));
    const auto val_pairs = read_two_column(s.input(a.val_pairs));
    const TripleSet train_set(qi, pi, en, train_pairs);
    const TripleSet val_set(qi, pi, en, val_pairs);

    TrainLog log;
    const auto state = train(train_set, val_set, config, &log);
    write_checkpoint(best_checkpoint(state), s.artifact("checkpoint.xck"));
    s.write("train.cfg", format_train_config(config));
    std::string tsv = "epoch\ttrain_loss\tval_mrr\tlr\tcollisions\timproved\n";
    tsv += "0\t\t" + num(log.initial_val_mrr) + "\t\t\t\n";
    for (const auto& e : log.epochs) {
        tsv += std::to_string(e.epoch) + "\t" + num(e.train_loss) + "\t" + num(e.val_mrr) + "\t" + num(e.lr) + "\t" +
               std::to_string(e.collisions) + "\t" + (e.improved ? "1" : "0") + "\n";
    }
    s.write("train_log.tsv", tsv);
    const auto [ai, ac] = effective_alphas(state.best, config.strategy);
    json summary{{"strategy", to_string(config.strategy)},
                 {"initial_val_mrr", log.initial_val_mrr},
                 {"best_val_mrr", state.best_val_mrr},
                 {"best_epoch", state.best_epoch},
                 {"best_step", state.best_step},
                 {"epochs", log.epochs.size()},
                 {"steps", state.step},
                 {"stop_reason", log.stop_reason},
                 {"alpha_image", ai},
                 {"alpha_cross", ac},
                 {"tau", state.best.tau}};
    s.write("train_summary.json", summary.dump(2) + "\n");
    s.finish(config.seed);
    std::printf("val in-batch MRR %.4f -> %.4f (best epoch %zu, %s)\n", log.initial_val_mrr, state.best_val_mrr,
                state.best_epoch, log.stop_reason.c_str());
}

void add_train(CLI::App& app) {
    auto a = std::make_shared<TrainArgs>();
    auto* sub = app.add_subcommand("train", "Contrastive fine-tuning of linear adapters with in-batch negatives");
    add_common(sub, *a);
    add_embedding_options(sub, a->emb);
    sub->add_option("--train-pairs", a->train_pairs, "query<TAB>entity training pairs")->required();
    sub->add_option("--val-pairs", a->val_pairs, "query<TAB>entity validation pairs")->required();
    sub->add_option("--config", a->config, "Training config (key = value); flags override it");
    sub->add_option("--strategy", a->overrides["strategy"], "mono, cross or joint");
    sub->add_option("--batch-size", a->overrides["batch_size"], "Triples per batch");
    sub->add_option("--lr", a->overrides["lr"], "Adapter and temperature learning rate");
    sub->add_option("--alpha-lr", a->overrides["alpha_lr"], "Fusion weight learning rate");
    sub->add_option("--weight-decay", a->overrides["weight_decay"], "Decoupled weight decay on adapters");
    sub->add_option("--warmup-steps", a->overrides["warmup_steps"], "Linear warmup steps");
    sub->add_option("--decay-steps", a->overrides["decay_steps"], "Linear decay steps after warmup");
    sub->add_option("--tau-init", a->overrides["tau_init"], "Initial log inverse temperature");
    sub->add_option("--alpha-init", a->overrides["alpha_init"], "Initial fusion weights (joint)");
    sub->add_option("--seed", a->overrides["seed"], "Shuffling seed");
    sub->add_option("--patience", a->overrides["patience"], "Epochs without improvement before stopping");
    sub->add_option("--max-epochs", a->overrides["max_epochs"], "Epoch cap");
    sub->add_option("--mask-collisions", a->overrides["mask_collisions"], "true/false: drop same-entity negatives");
    sub->callback([sub, a] { run_train(*sub, *a); });
}

// ---------------------------------------------------------------------------

struct ExportArgs : Common {
    Embeddings3 emb;
    fs::path checkpoint;
};

void run_export(const CLI::App& sub, const ExportArgs& a) {
    Session s(sub, a.out, a.threads);
    const auto ckpt = read_checkpoint(s.input(a.checkpoint));
    const auto ex = export_channels(ckpt, read_embeddings(s.embeddings_input(a.emb.query_images)),
                                    read_embeddings(s.embeddings_input(a.emb.passage_images)),
                                    read_embeddings(s.embeddings_input(a.emb.entity_names)));
    for (const auto& [name, m] : {std::pair{"query_images.emb", &ex.query_images},
                                  std::pair{"passage_images.emb", &ex.passage_images},
                                  std::pair{"entity_names.emb", &ex.entity_names}}) {
        write_embeddings(*m, s.artifact(name));
        s.artifact(sidecar_path(name).string());
    }
    s.write("fusion.cfg", format_fusion_spec({{{"mono", ex.alpha_image}, {"cross", ex.alpha_cross}}}));
    s.finish();
    std::printf("exported %s checkpoint (alpha mono %g, cross %g)\n", std::string(to_string(ckpt.strategy)).c_str(),
                ex.alpha_image, ex.alpha_cross);
}

void add_export(CLI::App& app) {
    auto a = std::make_shared<ExportArgs>();
    auto* sub = app.add_subcommand("export-channels", "Apply checkpoint adapters and write channel embeddings");
    add_common(sub, *a);
    sub->add_option("--checkpoint", a->checkpoint, "Checkpoint written by train")->required();
    add_embedding_options(sub, a->emb);
    sub->callback([sub, a] { run_export(*sub, *a); });
}

// ---------------------------------------------------------------------------

struct EvalIrArgs : Common {
    fs::path run, qrels;
    std::vector<std::string> metrics{"mrr@100", "p@1"};
};

void run_eval_ir(const CLI::App& sub, const EvalIrArgs& a) {
    Session s(sub, a.out, a.threads);
    const auto run = read_trec_run(s.input(a.run));
    const auto qrels = read_qrels(s.input(a.qrels));
    std::vector<MetricReport> reports;
    for (const auto& m : parse_metrics(a.metrics)) reports.push_back(evaluate(run, qrels, m));
    s.write("report.tsv", format_report_tsv(reports));
    s.write("report.json", format_report_json(reports));
    s.finish();
    std::fputs(format_report_table(reports).c_str(), stdout);
}

void add_eval_ir(CLI::App& app) {
    auto a = std::make_shared<EvalIrArgs>();
    auto* sub = app.add_subcommand("eval-ir", "Rank metrics of a run against qrels");
    add_common(sub, *a);
    sub->add_option("--run", a->run, "TREC run")->required();
    sub->add_option("--qrels", a->qrels, "Qrels")->required();
    sub->add_option("--metric", a->metrics, "Metrics such as mrr@100, p@1, r@10, success@5");
    sub->callback([sub, a] { run_eval_ir(*sub, *a); });
}

// ---------------------------------------------------------------------------

struct EvalAnswersArgs : Common {
    fs::path predictions, targets;
};

void run_eval_answers(const CLI::App& sub, const EvalAnswersArgs& a) {
    Session s(sub, a.out, a.threads);
    const auto summary = score_answers(read_predictions(s.input(a.predictions)), read_answer_targets(s.input(a.targets)));
    std::string tsv = "question_id\tkind\texact\tf1\tsoft\tparse_failure\n";
    for (const auto& q : summary.per_question) {
        tsv += q.question_id + "\t" + std::string(to_string(q.kind)) + "\t" + std::to_string(q.exact) + "\t" +
               num(q.f1) + "\t" + std::to_string(q.soft) + "\t" + (q.parse_failure ? "1" : "0") + "\n";
    }
    s.write("answers.tsv", tsv);
    json j{{"questions", summary.per_question.size()},
           {"exact_match", summary.exact_match},
           {"f1", summary.f1},
           {"soft_match", summary.soft_match},
           {"parse_failures", summary.parse_failures},
           {"missing_predictions", summary.missing_predictions}};
    s.write("answers.json", j.dump(2) + "\n");
    s.finish();
    std::printf("EM %.4f  F1 %.4f  soft %.4f  (%zu questions)\n", summary.exact_match, summary.f1, summary.soft_match,
                summary.per_question.size());
}

void add_eval_answers(CLI::App& app) {
    auto a = std::make_shared<EvalAnswersArgs>();
    auto* sub = app.add_subcommand("eval-answers", "Exact match, token F1 and soft match of predicted answers");
    add_common(sub, *a);
    sub->add_option("--predictions", a->predictions, "question_id<TAB>prediction file")->required();
    sub->add_option("--targets", a->targets, "Answer target JSON-lines file")->required();
    sub->callback([sub, a] { run_eval_answers(*sub, *a); });
}

// ---------------------------------------------------------------------------

struct SignificanceArgs : Common {
    fs::path run_a, run_b, qrels;
    std::string metric = "mrr@100";
    std::uint64_t rounds = 100000;
    std::uint64_t seed = 0;
    std::size_t exhaustive_max_n = 20;
};

void run_significance(const CLI::App& sub, const SignificanceArgs& a) {
    Session s(sub, a.out, a.threads);
    const auto qrels = read_qrels(s.input(a.qrels));
    const auto spec = MetricSpec::parse(a.metric);
    const auto ra = evaluate(read_trec_run(s.input(a.run_a)), qrels, spec);
    const auto rb = evaluate(read_trec_run(s.input(a.run_b)), qrels, spec);
    const auto [va, vb] = paired_values(ra, rb);
    const auto r = fisher_randomization(va, vb, {a.rounds, a.seed, a.threads, a.exhaustive_max_n});
    json j{{"metric", spec.name()},   {"queries", va.size()},       {"mean_a", ra.mean},
           {"mean_b", rb.mean},        {"observed", r.observed},     {"p_value", r.p_value},
           {"exhaustive", r.exhaustive}, {"assignments", r.assignments}, {"seed", a.seed}};
    s.write("significance.json", j.dump(2) + "\n");
    s.finish(a.seed);
    std::printf("%s: %.4f vs %.4f, p = %.6g (%s)\n", spec.name().c_str(), ra.mean, rb.mean, r.p_value,
                r.exhaustive ? "exhaustive" : "sampled");
}

void add_significance(CLI::App& app) {
    auto a = std::make_shared<SignificanceArgs>();
    auto* sub = app.add_subcommand("significance", "Paired Fisher randomization test between two runs");
    add_common(sub, *a);
    sub->add_option("--run-a", a->run_a, "First run")->required();
    sub->add_option("--run-b", a->run_b, "Second run")->required();
    sub->add_option("--qrels", a->qrels, "Qrels")->required();
    sub->add_option("--metric", a->metric, "Per-query metric");
    sub->add_option("--rounds", a->rounds, "Sampled assignments when not exhaustive")->check(CLI::PositiveNumber);
    sub->add_option("--seed", a->seed, "Sampling seed");
    sub->add_option("--exhaustive-max-n", a->exhaustive_max_n, "Enumerate all assignments up to this many queries")
        ->check(CLI::Range(0, 30));
    sub->callback([sub, a] { run_significance(*sub, *a); });
}

// ---------------------------------------------------------------------------

struct BuildQrelsArgs : Common {
    fs::path passages, targets;
    std::string granularity = "passage";
};

void run_build_qrels(const CLI::App& sub, const BuildQrelsArgs& a) {
    Session s(sub, a.out, a.threads);
    Granularity g;
    if (a.granularity == "passage") g = Granularity::passage;
    else if (a.granularity == "entity") g = Granularity::entity;
    else throw usage_error("unknown granularity '" + a.granularity + "' (expected passage or entity)");
    QrelsBuildStats stats;
    const auto qrels = qrels_from_answers(read_passages(s.input(a.passages)), read_answer_targets(s.input(a.targets)),
                                          g, &stats);
    write_qrels(qrels, s.artifact("qrels.txt"));
    s.write("dropped_queries.txt", [&] {
        std::string out;
        for (const auto& q : stats.queries_without_relevant) out += q + "\n";
        return out;
    }());
    s.finish();
    std::printf("%zu queries with relevant documents, %zu dropped\n", qrels.size(),
                stats.queries_without_relevant.size());
}

void add_build_qrels(CLI::App& app) {
    auto a = std::make_shared<BuildQrelsArgs>();
    auto* sub = app.add_subcommand("build-qrels", "Derive relevance judgments from answer strings");
    add_common(sub, *a);
    sub->add_option("--passages", a->passages, "Passage JSON-lines file")->required();
    sub->add_option("--targets", a->targets, "Answer target JSON-lines file")->required();
    sub->add_option("--granularity", a->granularity, "passage or entity");
    sub->callback([sub, a] { run_build_qrels(*sub, *a); });
}

}  // namespace

void register_commands(CLI::App& app) {
    add_validate(app);
    add_split(app);
    add_search(app);
    add_fuse(app);
    add_tune(app);
    add_train(app);
    add_export(app);
    add_eval_ir(app);
    add_eval_answers(app);
    add_significance(app);
    add_build_qrels(app);
}

}  // namespace xmr::cli
