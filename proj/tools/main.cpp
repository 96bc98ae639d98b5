// fnetsum: ingest, extract, train, summarize, score, and benchmark from one
// binary. Every subcommand that writes artifacts drops them into --output-dir
// together with a manifest.json recording the resolved configuration and
// content hashes of the inputs, so a run can be reproduced from the manifest.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fnetsum/checkpoint.hpp"
#include "fnetsum/common.hpp"
#include "fnetsum/data.hpp"
#include "fnetsum/mixbench.hpp"
#include "fnetsum/model.hpp"
#include "fnetsum/rouge.hpp"
#include "fnetsum/textrank.hpp"
#include "fnetsum/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fnetsum;

namespace {

std::string iso_utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string file_content_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return "fnv1a64:" + hex64(fnv1a64(ss.str()));
}

/// Collects what a subcommand resolved and touched, then serializes
/// manifest.json into the output directory.
class Manifest {
  public:
    Manifest(std::string subcommand, std::string output_dir)
        : subcommand_(std::move(subcommand)), output_dir_(std::move(output_dir)) {
        started_ = iso_utc_now();
        fs::create_directories(output_dir_);
    }

    void config(const std::string& key, const json& value) { config_[key] = value; }
    void input(const std::string& path) { inputs_[path] = file_content_hash(path); }
    void artifact(const std::string& name) { artifacts_.push_back(name); }

    fs::path dir() const { return output_dir_; }
    fs::path path_for(const std::string& name) const { return fs::path(output_dir_) / name; }

    void write() const {
        json m;
        m["subcommand"] = subcommand_;
        m["config"] = config_;
        m["inputs"] = inputs_;
        m["artifacts"] = artifacts_;
        m["output_dir"] = output_dir_;
        m["started"] = started_;
        m["finished"] = iso_utc_now();
        std::ofstream out(path_for("manifest.json"));
        if (!out) throw IoError("cannot write manifest to " + output_dir_);
        out << m.dump(2) << '\n';
    }

  private:
    std::string subcommand_;
    std::string output_dir_;
    std::string started_;
    json config_ = json::object();
    json inputs_ = json::object();
    std::vector<std::string> artifacts_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

/// Pulls the text field out of one JSONL record, preferring generated
/// candidates over gold abstracts so the same reader serves both sides of a
/// rouge comparison.
std::string text_field(const json& record, const std::string& path, std::size_t line_no) {
    for (const char* key : {"candidate", "summary", "abstract", "text"}) {
        auto it = record.find(key);
        if (it != record.end() && it->is_string()) return it->get<std::string>();
    }
    throw ParseError(path + " line " + std::to_string(line_no) +
                     ": no candidate/summary/abstract/text field");
}

std::vector<std::vector<std::string>> load_summary_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        rows.push_back(tokenize(text_field(record, path, line_no)));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// stats

int run_stats(const std::string& corpus_path, const std::string& output_dir) {
    TokenizedCorpus corpus = load_tokenized_corpus(corpus_path);
    std::vector<double> article_lens, abstract_lens;
    for (const TokenizedDocument& doc : corpus.documents) {
        article_lens.push_back(static_cast<double>(doc.article.size()));
        abstract_lens.push_back(static_cast<double>(doc.abstract.size()));
    }
    const std::string table = format_stats_table(
        {"article", "abstract"}, {describe(article_lens), describe(abstract_lens)});
    std::cout << table;
    std::cout << "documents: " << corpus.documents.size() << "  skipped: " << corpus.skipped
              << '\n';
    if (!output_dir.empty()) {
        Manifest manifest("stats", output_dir);
        manifest.config("corpus", corpus_path);
        manifest.input(corpus_path);
        write_text(manifest.path_for("stats.txt"), table);
        manifest.artifact("stats.txt");
        manifest.write();
    }
    return 0;
}

// ---------------------------------------------------------------------------
// extract

int run_extract(const std::string& corpus_path, double ratio_target,
                const std::string& output_dir) {
    if (ratio_target <= 0.0) throw ConfigError("--ratio-target must be positive");
    std::ifstream in(corpus_path);
    if (!in) throw IoError("cannot open " + corpus_path);

    Manifest manifest("extract", output_dir);
    manifest.config("corpus", corpus_path);
    manifest.config("ratio_target", ratio_target);
    manifest.input(corpus_path);

    std::ofstream out(manifest.path_for("extracted.jsonl"));
    if (!out) throw IoError("cannot write " + manifest.path_for("extracted.jsonl").string());

    std::string line;
    std::size_t line_no = 0, written = 0, skipped = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(corpus_path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        auto article_it = record.find("article");
        if (article_it == record.end() || !article_it->is_string()) {
            ++skipped;
            continue;
        }
        const std::string article = article_it->get<std::string>();
        const std::size_t token_count = tokenize(article).size();
        if (token_count == 0) {
            ++skipped;
            continue;
        }
        const double ratio = std::min(1.0, ratio_target / static_cast<double>(token_count));
        ExtractResult result = extract(article, ratio);
        json out_record;
        out_record["article"] = result.text;
        auto abstract_it = record.find("abstract");
        if (abstract_it != record.end() && abstract_it->is_string())
            out_record["abstract"] = abstract_it->get<std::string>();
        out << out_record.dump() << '\n';
        ++written;
        std::printf("doc %zu: tokens %zu -> %zu (ratio %.3f)\n", written,
                    result.original_tokens, result.extracted_tokens, result.ratio);
    }
    std::printf("extracted %zu documents (%zu skipped) -> %s\n", written, skipped,
                manifest.path_for("extracted.jsonl").c_str());
    manifest.artifact("extracted.jsonl");
    manifest.write();
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string corpus;
    std::string val_corpus;
    std::string variant = "fnet";
    std::string component = "real";
    std::size_t layers = 2;
    std::size_t heads = 20;
    std::size_t d_model = 200;
    std::size_t d_ff = 9000;
    std::size_t max_src_len = 512;
    std::size_t max_tgt_len = 128;
    std::size_t vocab_cap = 0;  // 0 = unlimited
    std::size_t min_freq = 1;
    bool no_causal_rescale = false;
    std::string embeddings;
    std::string resume;
    std::uint64_t seed = 42;
    std::string output_dir = "fnetsum-train";
    TrainingConfig training;
};

int run_train(const TrainArgs& args) {
    Manifest manifest("train", args.output_dir);

    TokenizedCorpus corpus = load_tokenized_corpus(args.corpus);
    const std::size_t cap =
        args.vocab_cap == 0 ? std::numeric_limits<std::size_t>::max() : args.vocab_cap;
    Vocabulary vocab = build_vocab(corpus, args.min_freq, cap);
    std::vector<Example> train_set =
        encode_corpus(corpus, vocab, args.max_src_len, args.max_tgt_len);
    if (train_set.empty()) throw ConfigError("training corpus has no usable documents");
    std::vector<Example> val_set;
    if (!args.val_corpus.empty())
        val_set = load_corpus(args.val_corpus, vocab, args.max_src_len, args.max_tgt_len);

    ModelConfig config;
    config.variant = parse_variant(args.variant);
    config.component = parse_component(args.component);
    config.layers = args.layers;
    config.mixing_heads = args.heads;
    config.d_model = args.d_model;
    config.d_ff = args.d_ff;
    config.max_src_len = args.max_src_len;
    config.max_tgt_len = args.max_tgt_len;
    config.causal_rescale = !args.no_causal_rescale;
    config.vocab_size = vocab.size();
    config.seed = args.seed;
    config.validate();

    PretrainedEmbeddings pretrained;
    const PretrainedEmbeddings* pretrained_ptr = nullptr;
    if (!args.embeddings.empty()) {
        pretrained = load_pretrained_embeddings(args.embeddings, vocab, config.d_model);
        pretrained_ptr = &pretrained;
        std::printf("embeddings: %zu/%zu vocab rows covered (%.1f%%)\n", pretrained.covered_count,
                    vocab.size(), 100.0 * pretrained.coverage());
    }

    Model model = Model::build(config, pretrained_ptr);
    if (!args.resume.empty()) {
        load_weights(model, read_checkpoint(args.resume));
        std::printf("resumed weights from %s\n", args.resume.c_str());
    }
    std::printf("%s model: %zu trainable parameters, vocab %zu\n",
                std::string(variant_name(config.variant)).c_str(), model.parameter_count(),
                vocab.size());

    TrainingConfig training = args.training;
    training.seed = args.seed;

    TrainerIO io;
    io.metrics_path = manifest.path_for("metrics.csv").string();
    io.checkpoint_dir = manifest.dir().string();
    io.vocab = &vocab;

    TrainResult result = train(model, train_set, val_set, training, io);
    for (const EpochMetrics& epoch : result.history)
        std::printf("epoch %zu: train %.6f val %.6f\n", epoch.epoch, epoch.train_loss,
                    epoch.val_loss);
    std::printf("best epoch %zu (loss %.6f), checkpoint %s\n", result.best_epoch,
                result.best_val_loss, result.best_checkpoint.c_str());

    manifest.config("corpus", args.corpus);
    if (!args.val_corpus.empty()) manifest.config("val", args.val_corpus);
    json model_cfg = json::object();
    {
        std::istringstream cfg(config.canonical_text());
        std::string cfg_line;
        while (std::getline(cfg, cfg_line)) {
            const std::size_t eq = cfg_line.find('=');
            if (eq != std::string::npos)
                model_cfg[cfg_line.substr(0, eq)] = cfg_line.substr(eq + 1);
        }
    }
    manifest.config("model", model_cfg);
    manifest.config("seed", args.seed);
    manifest.config("epochs", training.epochs);
    manifest.config("lr", training.learning_rate);
    manifest.config("grad_clip", training.grad_clip_norm);
    manifest.config("label_smoothing", training.label_smoothing);
    manifest.config("grad_accumulation", training.grad_accumulation);
    manifest.config("warmup_steps", training.warmup_steps);
    manifest.config("checkpoint_every", training.checkpoint_every);
    manifest.config("min_freq", args.min_freq);
    manifest.config("vocab_cap", args.vocab_cap);
    if (!args.embeddings.empty()) {
        manifest.config("embeddings", args.embeddings);
        manifest.input(args.embeddings);
    }
    if (!args.resume.empty()) {
        manifest.config("resume", args.resume);
        manifest.input(args.resume);
    }
    manifest.input(args.corpus);
    if (!args.val_corpus.empty()) manifest.input(args.val_corpus);
    manifest.artifact("metrics.csv");
    manifest.artifact("best.ckpt");
    manifest.artifact("last.ckpt");
    manifest.write();
    return 0;
}

// ---------------------------------------------------------------------------
// summarize

int run_summarize(const std::string& checkpoint_path, const std::string& corpus_path,
                  std::size_t max_len, const std::string& output_dir) {
    Manifest manifest("summarize", output_dir);
    manifest.config("checkpoint", checkpoint_path);
    manifest.config("corpus", corpus_path);
    manifest.input(checkpoint_path);
    manifest.input(corpus_path);

    Vocabulary vocab;
    Model model = restore_model(read_checkpoint(checkpoint_path), vocab);
    if (max_len == 0) max_len = model.config().max_tgt_len;
    manifest.config("max_len", max_len);

    TokenizedCorpus corpus = load_tokenized_corpus(corpus_path);
    std::ofstream out(manifest.path_for("candidates.jsonl"));
    if (!out) throw IoError("cannot write " + manifest.path_for("candidates.jsonl").string());
    for (const TokenizedDocument& doc : corpus.documents) {
        std::vector<TokenId> src = vocab.encode(doc.article);
        if (src.size() > model.config().max_src_len) src.resize(model.config().max_src_len);
        std::vector<TokenId> generated = model.generate(src, max_len);
        json record;
        record["candidate"] = join_tokens(vocab.decode(generated));
        out << record.dump() << '\n';
    }
    std::printf("wrote %zu candidates -> %s\n", corpus.documents.size(),
                manifest.path_for("candidates.jsonl").c_str());
    manifest.artifact("candidates.jsonl");
    manifest.write();
    return 0;
}

// ---------------------------------------------------------------------------
// rouge

int run_rouge(const std::string& candidates_path, const std::string& references_path,
              const std::string& label, const std::string& output_dir) {
    auto candidates = load_summary_file(candidates_path);
    auto references = load_summary_file(references_path);
    if (candidates.size() != references.size())
        throw ConfigError("candidate/reference counts differ: " +
                          std::to_string(candidates.size()) + " vs " +
                          std::to_string(references.size()));
    CorpusRouge scores = score_corpus(candidates, references);
    const std::string report = format_rouge_report({{label, scores}});
    std::cout << report;
    if (!output_dir.empty()) {
        Manifest manifest("rouge", output_dir);
        manifest.config("candidates", candidates_path);
        manifest.config("references", references_path);
        manifest.config("label", label);
        manifest.input(candidates_path);
        manifest.input(references_path);
        write_text(manifest.path_for("rouge.txt"), report);
        manifest.artifact("rouge.txt");
        manifest.write();
    }
    return 0;
}

// ---------------------------------------------------------------------------
// bench

int run_bench(const std::vector<std::size_t>& lengths, std::size_t d, std::size_t heads,
              std::size_t reps, const std::string& output_dir) {
    std::vector<MixingBenchRow> rows = mixing_bench(lengths, d, heads, reps);
    const std::string csv = format_bench_csv(rows);
    std::cout << csv;
    if (!output_dir.empty()) {
        Manifest manifest("bench", output_dir);
        manifest.config("lengths", lengths);
        manifest.config("d", d);
        manifest.config("heads", heads);
        manifest.config("reps", reps);
        write_text(manifest.path_for("bench.csv"), csv);
        manifest.artifact("bench.csv");
        manifest.write();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fourier token-mixing summarization pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read defaults from an INI-style key=value file");

    // stats
    std::string stats_corpus, stats_out;
    CLI::App* stats = app.add_subcommand("stats", "Token-length summary of a JSONL corpus");
    stats->add_option("corpus", stats_corpus, "JSONL corpus path")->required();
    stats->add_option("--output-dir", stats_out, "Also write stats.txt + manifest here");

    // extract
    std::string extract_corpus, extract_out = "fnetsum-extract";
    double ratio_target = 512.0;
    CLI::App* extract_cmd =
        app.add_subcommand("extract", "TextRank extraction toward a token budget");
    extract_cmd->add_option("corpus", extract_corpus, "JSONL corpus path")->required();
    extract_cmd->add_option("--ratio-target", ratio_target,
                            "Per-article ratio = target / article tokens, clipped to (0,1]");
    extract_cmd->add_option("--output-dir", extract_out, "Artifact directory");

    // train
    TrainArgs targs;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a summarization model");
    train_cmd->add_option("corpus", targs.corpus, "Training corpus (JSONL)")->required();
    train_cmd->add_option("--val", targs.val_corpus, "Validation corpus (JSONL)");
    train_cmd->add_option("--variant", targs.variant, "fnet | hybrid | fourier")
        ->check(CLI::IsMember({"fnet", "hybrid", "fourier"}));
    train_cmd->add_option("--component", targs.component, "real | imag | norm")
        ->check(CLI::IsMember({"real", "imag", "norm"}));
    train_cmd->add_option("--layers", targs.layers, "Encoder/decoder blocks (1..6)");
    train_cmd->add_option("--heads", targs.heads, "Mixing heads");
    train_cmd->add_option("--d-model", targs.d_model, "Model width");
    train_cmd->add_option("--d-ff", targs.d_ff, "Feed-forward width");
    train_cmd->add_option("--max-src-len", targs.max_src_len, "Article truncation length");
    train_cmd->add_option("--max-tgt-len", targs.max_tgt_len, "Abstract truncation length");
    train_cmd->add_option("--vocab-size", targs.vocab_cap, "Vocabulary cap (0 = unlimited)");
    train_cmd->add_option("--min-freq", targs.min_freq, "Minimum token frequency");
    train_cmd->add_flag("--no-causal-rescale", targs.no_causal_rescale,
                        "Disable prefix rescaling in the causal DFT");
    train_cmd->add_option("--embeddings", targs.embeddings, "Pretrained embedding text file");
    train_cmd->add_option("--resume", targs.resume, "Checkpoint to load weights from");
    train_cmd->add_option("--epochs", targs.training.epochs, "Training epochs");
    train_cmd->add_option("--lr", targs.training.learning_rate, "Adam learning rate");
    train_cmd->add_option("--grad-clip", targs.training.grad_clip_norm,
                          "Global gradient-norm clip (0 disables)");
    train_cmd->add_option("--label-smoothing", targs.training.label_smoothing,
                          "Cross-entropy label smoothing");
    train_cmd->add_option("--grad-accumulation", targs.training.grad_accumulation,
                          "Examples per optimizer step");
    train_cmd->add_option("--warmup-steps", targs.training.warmup_steps,
                          "Linear learning-rate warmup steps");
    train_cmd->add_option("--checkpoint-every", targs.training.checkpoint_every,
                          "Epochs between last.ckpt refreshes (0 = end of training)");
    train_cmd->add_option("--seed", targs.seed, "Seed for init, shuffling, and dropout-free RNG");
    train_cmd->add_option("--output-dir", targs.output_dir, "Artifact directory");

    // summarize
    std::string sum_checkpoint, sum_corpus, sum_out = "fnetsum-summarize";
    std::size_t sum_max_len = 0;
    CLI::App* summarize_cmd =
        app.add_subcommand("summarize", "Greedy generation from a checkpoint");
    summarize_cmd->add_option("--checkpoint", sum_checkpoint, "Model checkpoint")->required();
    summarize_cmd->add_option("corpus", sum_corpus, "JSONL corpus path")->required();
    summarize_cmd->add_option("--max-len", sum_max_len, "Generation cap (0 = model max)");
    summarize_cmd->add_option("--output-dir", sum_out, "Artifact directory");

    // rouge
    std::string rouge_candidates, rouge_references, rouge_label = "model", rouge_out;
    CLI::App* rouge_cmd = app.add_subcommand("rouge", "Score candidates against references");
    rouge_cmd->add_option("candidates", rouge_candidates, "Candidate JSONL")->required();
    rouge_cmd->add_option("references", rouge_references, "Reference JSONL")->required();
    rouge_cmd->add_option("--label", rouge_label, "Row label in the report");
    rouge_cmd->add_option("--output-dir", rouge_out, "Also write rouge.txt + manifest here");

    // bench
    std::vector<std::size_t> bench_lengths{64, 128, 256, 512, 1024};
    std::size_t bench_d = 200, bench_heads = 20, bench_reps = 7;
    std::string bench_out;
    CLI::App* bench_cmd =
        app.add_subcommand("bench", "Fourier mixing vs attention timing CSV");
    bench_cmd->add_option("--lengths", bench_lengths, "Sequence lengths")->delimiter(',');
    bench_cmd->add_option("--d", bench_d, "Model width");
    bench_cmd->add_option("--heads", bench_heads, "Mixing heads");
    bench_cmd->add_option("--reps", bench_reps, "Repetitions per timing (>= 5)");
    bench_cmd->add_option("--output-dir", bench_out, "Also write bench.csv + manifest here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (stats->parsed()) return run_stats(stats_corpus, stats_out);
        if (extract_cmd->parsed()) return run_extract(extract_corpus, ratio_target, extract_out);
        if (train_cmd->parsed()) return run_train(targs);
        if (summarize_cmd->parsed())
            return run_summarize(sum_checkpoint, sum_corpus, sum_max_len, sum_out);
        if (rouge_cmd->parsed())
            return run_rouge(rouge_candidates, rouge_references, rouge_label, rouge_out);
        if (bench_cmd->parsed())
            return run_bench(bench_lengths, bench_d, bench_heads, bench_reps, bench_out);
    } catch (const std::exception& e) {
        std::cerr << "fnetsum: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
