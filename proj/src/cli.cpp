#include "proseforge/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "proseforge/config.hpp"
#include "proseforge/decode.hpp"
#include "proseforge/embeddings.hpp"
#include "proseforge/errors.hpp"
#include "proseforge/evaluation.hpp"
#include "proseforge/pipeline.hpp"
#include "proseforge/poemgen.hpp"
#include "proseforge/training.hpp"

namespace proseforge {

namespace {

void log_config(const Config& cfg) {
    for (const auto& [key, value] : cfg.entries()) {
        std::cout << "config " << key << " = " << value << '\n';
    }
}

std::filesystem::path cache_dir(const Config& cfg) {
    if (const char* env = std::getenv("PROSE_FORGE_CACHE")) {
        return std::filesystem::path(env);
    }
    return std::filesystem::path(cfg.get("cache_dir", "checkpoints"));
}

std::vector<std::string> file_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

TrainingConfig training_config_from(const Config& cfg) {
    TrainingConfig tc;
    tc.learning_rate = cfg.get_double("learning_rate", tc.learning_rate);
    tc.epochs = cfg.get_int("epochs", tc.epochs);
    tc.batch_size = cfg.get_int("batch_size", tc.batch_size);
    tc.hidden_size = cfg.get_int("hidden_size", tc.hidden_size);
    tc.embedding_dim = cfg.get_int("embedding_dim", tc.embedding_dim);
    tc.seed = cfg.get_u64("seed", tc.seed);
    tc.max_sentence_length = cfg.get_int("max_sentence_length", tc.max_sentence_length);
    tc.clip_norm = cfg.get_double("clip_norm", tc.clip_norm);
    return tc;
}

EmbeddingMatrix prepare_embeddings(const Config& cfg, const Vocabulary& vocab,
                                   int dim, std::uint64_t seed) {
    EmbeddingMatrix emb;
    if (cfg.has("vectors")) {
        emb = load_pretrained(cfg.require("vectors"), vocab, dim, seed);
    } else {
        emb = random_embeddings(vocab, dim, seed);
    }
    if (cfg.has("lexicon")) {
        const Lexicon lexicon = Lexicon::load(cfg.require("lexicon"));
        const double alpha = cfg.get_double("retrofit_alpha", 1.0);
        const double beta = cfg.get_double("retrofit_beta", 1.0);
        const int iters = cfg.get_int("retrofit_iters", 10);
        emb = retrofit(emb, vocab, lexicon, alpha, beta, iters);
        std::cout << "retrofitted embeddings with " << lexicon.size()
                  << " lexicon pairs (" << iters << " sweeps)\n";
    }
    return emb;
}

int cmd_train_transfer(const Config& cfg, AttentionKind attention, bool pointer,
                       std::filesystem::path output) {
    ParallelCorpus corpus;
    corpus.train = load_parallel(cfg.require("train_source"), cfg.require("train_target"));
    if (cfg.has("val_source")) {
        corpus.val = load_parallel(cfg.require("val_source"), cfg.require("val_target"));
    }
    std::cout << "loaded " << corpus.train.size() << " train / " << corpus.val.size()
              << " val pairs\n";
    const TrainingConfig tc = training_config_from(cfg);
    const Vocabulary vocab = Vocabulary::build(corpus.train, cfg.get_int("min_count", 2),
                                               cfg.get_int("max_vocab", 12000));
    std::cout << "vocabulary size " << vocab.size() << '\n';
    const EmbeddingMatrix emb = prepare_embeddings(cfg, vocab, tc.embedding_dim, tc.seed);

    if (output.empty()) {
        const std::filesystem::path dir = cache_dir(cfg);
        std::filesystem::create_directories(dir);
        std::string stem = "transfer_" + attention_name(attention);
        if (pointer) stem += "_pointer";
        output = dir / (stem + ".ckpt");
    } else if (output.has_parent_path()) {
        std::filesystem::create_directories(output.parent_path());
    }
    const TrainArtifacts artifacts =
        train(corpus, tc, attention, pointer, vocab, emb, output);
    for (const EpochRecord& rec : artifacts.epochs) {
        std::cout << "epoch " << rec.epoch << " train_loss " << rec.train_loss
                  << " val_loss " << rec.val_loss << " wall_s " << rec.wall_seconds;
        if (rec.clip_events > 0) std::cout << " clipped " << rec.clip_events;
        std::cout << '\n';
    }
    std::cout << "final checkpoint: " << artifacts.final_checkpoint.string() << '\n';
    std::cout << "best checkpoint: " << artifacts.best_checkpoint.string() << '\n';
    return 0;
}

int cmd_train_poem(const Config& cfg, const std::filesystem::path& input,
                   std::filesystem::path output, std::uint64_t seed) {
    const auto poems = load_poem_corpus(input);
    std::vector<std::filesystem::path> paintings;
    const std::filesystem::path dir = cfg.require("paintings_dir");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file()) paintings.push_back(entry.path());
    }
    std::sort(paintings.begin(), paintings.end());
    if (paintings.empty()) throw ConfigError("paintings_dir has no files: " + dir.string());

    PoemTrainConfig pc;
    pc.rounds = cfg.get_int("poem_rounds", pc.rounds);
    pc.batch_size = cfg.get_int("poem_batch_size", pc.batch_size);
    pc.policy_lr = cfg.get_double("policy_lr", pc.policy_lr);
    pc.disc_lr = cfg.get_double("disc_lr", pc.disc_lr);
    pc.disc_epochs = cfg.get_int("disc_epochs", pc.disc_epochs);
    pc.disc_hidden = cfg.get_int("disc_hidden", pc.disc_hidden);
    pc.lambda = cfg.get_double("reward_lambda", pc.lambda);
    pc.hidden = cfg.get_int("poem_hidden", pc.hidden);
    pc.emb_dim = cfg.get_int("poem_embedding_dim", pc.emb_dim);
    pc.max_length = cfg.get_int("poem_max_length", pc.max_length);
    pc.object_dim = cfg.get_int("object_dim", pc.object_dim);
    pc.sentiment_dim = cfg.get_int("sentiment_dim", pc.sentiment_dim);
    pc.scene_dim = cfg.get_int("scene_dim", pc.scene_dim);
    pc.min_count = cfg.get_int("poem_min_count", pc.min_count);
    pc.max_vocab = cfg.get_int("poem_max_vocab", pc.max_vocab);
    pc.seed = seed;

    PoemModel model;
    const PoemTrainResult result = train_poem(poems, paintings, pc, &model);
    for (std::size_t i = 0; i < result.mean_rewards.size(); ++i) {
        std::cout << "round " << (i + 1) << " mean_reward " << result.mean_rewards[i] << '\n';
    }
    if (output.empty()) {
        const std::filesystem::path cache = cache_dir(cfg);
        std::filesystem::create_directories(cache);
        output = cache / "poem.ckpt";
    } else if (output.has_parent_path()) {
        std::filesystem::create_directories(output.parent_path());
    }
    save_poem_model(model, output);
    std::cout << "poem checkpoint: " << output.string() << '\n';
    return 0;
}

int cmd_retrofit(const std::filesystem::path& input, const std::filesystem::path& lexicon_path,
                 const std::filesystem::path& output, double alpha, double beta, int iters) {
    // The file's own words form the vocabulary; dimension comes from the
    // first line.
    std::ifstream in(input);
    if (!in) throw IoError("cannot open " + input.string());
    std::vector<std::string> words;
    std::string line;
    int dim = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (dim < 0) {
            dim = 0;
            double x;
            while (ls >> x) ++dim;
            if (dim == 0) throw FormatError(input.string() + ": no vector values found");
        }
        if (std::find(words.begin(), words.end(), word) == words.end()) {
            words.push_back(word);
        }
    }
    if (words.empty()) throw FormatError(input.string() + ": empty vector file");
    std::vector<std::string> tokens{"<pad>", "<unk>", "<bos>", "<eos>"};
    tokens.insert(tokens.end(), words.begin(), words.end());
    const Vocabulary vocab = Vocabulary::from_tokens(tokens);
    const EmbeddingMatrix emb = load_pretrained(input, vocab, dim);
    const Lexicon lexicon = Lexicon::load(lexicon_path);
    std::vector<double> trace;
    const EmbeddingMatrix fitted =
        retrofit_with_trace(emb, vocab, lexicon, alpha, beta, iters, &trace);
    save_vectors(output, vocab, fitted);
    std::cout << "retrofit objective: " << trace.front() << " -> " << trace.back()
              << " over " << iters << " sweeps\n";
    std::cout << "wrote " << words.size() << " vectors of dimension " << dim << " to "
              << output.string() << '\n';
    return 0;
}

int cmd_translate(const std::filesystem::path& model_path, const std::filesystem::path& input,
                  const std::filesystem::path& output, int max_len,
                  const std::string& attention_out) {
    const Seq2SeqModel model = load_model(model_path);
    std::optional<std::filesystem::path> sidecar;
    if (!attention_out.empty()) sidecar = attention_out;
    translate_file(model, input, output, max_len, sidecar);
    std::cout << "wrote translations to " << output.string() << '\n';
    return 0;
}

int cmd_evaluate(const std::filesystem::path& hyp_path, const std::filesystem::path& ref_path,
                 const std::string& report_path) {
    const auto pairs = load_parallel(hyp_path, ref_path);
    std::vector<std::pair<TokenSeq, TokenSeq>> scored;
    for (const SentencePair& p : pairs) scored.emplace_back(p.source, p.target);
    const BleuReport report = corpus_report(scored);
    std::cout << "sentences " << scored.size() << '\n';
    std::cout << "average_sentence_bleu " << report.average_target_bleu << '\n';
    std::cout << "corpus_bleu " << report.corpus_bleu << '\n';
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw IoError("cannot write " + report_path);
        out << "average_sentence_bleu " << report.average_target_bleu << '\n';
        out << "corpus_bleu " << report.corpus_bleu << '\n';
        for (std::size_t i = 0; i < report.sentence_scores.size(); ++i) {
            out << (i + 1) << ' ' << report.sentence_scores[i] << '\n';
        }
    }
    return 0;
}

int cmd_bleu_by_length(const std::filesystem::path& hyp_path,
                       const std::filesystem::path& ref_path,
                       const std::filesystem::path& src_path, int bin_width,
                       const std::filesystem::path& output) {
    const auto hyp_lines = file_lines(hyp_path);
    const auto ref_lines = file_lines(ref_path);
    const auto src_lines = file_lines(src_path);
    if (hyp_lines.size() != ref_lines.size() || hyp_lines.size() != src_lines.size()) {
        throw AlignmentError("bleu-by-length: input files have different line counts");
    }
    std::vector<SentenceEval> sentences;
    for (std::size_t i = 0; i < hyp_lines.size(); ++i) {
        const auto hyp = tokenize(hyp_lines[i]);
        const auto ref = tokenize(ref_lines[i]);
        const auto src = tokenize(src_lines[i]);
        if (ref.empty() && hyp.empty() && src.empty()) continue;
        if (ref.empty() || src.empty()) {
            throw AlignmentError("bleu-by-length: blank line " + std::to_string(i + 1) +
                                 " in reference or source");
        }
        sentences.push_back(SentenceEval{sentence_bleu(hyp, ref),
                                         static_cast<int>(src.size())});
    }
    const LengthBinnedReport report = bleu_by_length(sentences, bin_width);
    write_length_report_csv(output, report);
    std::vector<double> mids;
    std::vector<double> means;
    for (const LengthBin& bin : report.bins) {
        std::cout << "bin " << bin.lo << ".." << bin.hi << " count " << bin.count
                  << " mean_bleu " << bin.mean_bleu << '\n';
        if (bin.count > 0) {
            mids.push_back((bin.lo + bin.hi) / 2.0);
            means.push_back(bin.mean_bleu);
        }
    }
    if (mids.size() >= 2) {
        std::cout << "spearman_length_vs_bleu " << spearman(mids, means) << '\n';
    }
    std::cout << "wrote " << output.string() << '\n';
    return 0;
}

int cmd_likert(const std::filesystem::path& input, const std::string& report_path) {
    const auto records = load_likert_csv(input);
    const LikertSummary summary = likert_summary(records);
    std::ostringstream out;
    out << "records " << records.size() << '\n';
    out << "content " << round1(summary.content) << '\n';
    out << "creativity " << round1(summary.creativity) << '\n';
    out << "style " << round1(summary.style) << '\n';
    std::cout << out.str();
    if (!report_path.empty()) {
        std::ofstream f(report_path);
        if (!f) throw IoError("cannot write " + report_path);
        f << out.str();
    }
    return 0;
}

int cmd_poem(const std::filesystem::path& model_path, const std::filesystem::path& image,
             std::uint64_t seed, const std::string& output) {
    const PoemModel model = load_poem_model(model_path);
    const PolicyPoemStage stage(model);
    const auto lines = stage.poem_lines(image, seed);
    std::ostringstream text;
    for (const std::string& line : lines) text << line << '\n';
    std::cout << text.str();
    if (!output.empty()) {
        std::ofstream f(output);
        if (!f) throw IoError("cannot write " + output);
        f << text.str();
    }
    return 0;
}

int cmd_prose(const std::filesystem::path& poem_model_path,
              const std::filesystem::path& transfer_model_path,
              const std::filesystem::path& image, std::uint64_t seed, int max_len,
              const std::string& output) {
    const PoemModel poem_model = load_poem_model(poem_model_path);
    const Seq2SeqModel transfer = load_model(transfer_model_path);
    const PolicyPoemStage stage(poem_model);
    const ProseResult result = paint_to_prose(image, stage, transfer, seed, max_len);
    std::cout << result.prose << '\n';
    if (!output.empty()) {
        std::ofstream f(output);
        if (!f) throw IoError("cannot write " + output);
        f << result.prose << '\n';
        std::ofstream rec(output + ".record");
        if (!rec) throw IoError("cannot write " + output + ".record");
        rec << result.to_record();
    }
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"painting-to-Shakespearean-prose toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string input;
    std::string output;
    std::string model_path;
    std::string poem_model_path;
    std::string reference;
    std::string source;
    std::string attention = "global";
    std::string attention_out;
    std::string lexicon_path;
    bool pointer = false;
    std::uint64_t seed = 42;
    bool seed_given = false;
    int bin_width = 5;
    int max_len = 60;
    double alpha = 1.0;
    double beta = 1.0;
    int iters = 10;

    auto* train_transfer = app.add_subcommand("train-transfer", "train a style-transfer model");
    train_transfer->add_option("--config", config_path, "key=value config file")->required();
    train_transfer->add_option("--attention", attention, "global or bahdanau")
        ->check(CLI::IsMember({"global", "bahdanau"}));
    train_transfer->add_flag("--pointer", pointer, "enable the copy mechanism");
    train_transfer->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
    train_transfer->add_option("--output", output, "checkpoint path");

    auto* train_poem_cmd = app.add_subcommand("train-poem", "train the poem generator");
    train_poem_cmd->add_option("--config", config_path, "key=value config file")->required();
    train_poem_cmd->add_option("--input", input, "poem corpus file")->required();
    train_poem_cmd->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
    train_poem_cmd->add_option("--output", output, "checkpoint path");

    auto* retrofit_cmd = app.add_subcommand("retrofit", "retrofit word vectors with a lexicon");
    retrofit_cmd->add_option("--input", input, "word-vector text file")->required();
    retrofit_cmd->add_option("--lexicon", lexicon_path, "tab-separated word pairs")->required();
    retrofit_cmd->add_option("--output", output, "output vector file")->required();
    retrofit_cmd->add_option("--alpha", alpha, "fit-to-original weight");
    retrofit_cmd->add_option("--beta", beta, "neighbor-pull weight");
    retrofit_cmd->add_option("--iters", iters, "update sweeps");

    auto* translate_cmd = app.add_subcommand("translate", "translate a file line by line");
    translate_cmd->add_option("--model", model_path, "transfer checkpoint")->required();
    translate_cmd->add_option("--input", input, "one sentence per line")->required();
    translate_cmd->add_option("--output", output, "output file")->required();
    translate_cmd->add_option("--max-len", max_len, "decode step limit");
    translate_cmd->add_option("--attention-out", attention_out, "attention matrix sidecar");

    auto* poem_cmd = app.add_subcommand("poem", "generate a poem for a painting");
    poem_cmd->add_option("--poem-model", poem_model_path, "poem checkpoint")->required();
    poem_cmd->add_option("--input", input, "painting image file")->required();
    poem_cmd->add_option("--seed", seed, "sampling seed");
    poem_cmd->add_option("--output", output, "output file");

    auto* prose_cmd = app.add_subcommand("prose", "painting to Shakespearean prose");
    prose_cmd->add_option("--poem-model", poem_model_path, "poem checkpoint")->required();
    prose_cmd->add_option("--model", model_path, "transfer checkpoint")->required();
    prose_cmd->add_option("--input", input, "painting image file")->required();
    prose_cmd->add_option("--seed", seed, "sampling seed");
    prose_cmd->add_option("--max-len", max_len, "decode step limit");
    prose_cmd->add_option("--output", output, "prose file (record goes to <output>.record)");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "BLEU for hypothesis vs reference");
    evaluate_cmd->add_option("--input", input, "hypothesis file")->required();
    evaluate_cmd->add_option("--reference", reference, "reference file")->required();
    evaluate_cmd->add_option("--output", output, "per-sentence report file");

    auto* binned_cmd = app.add_subcommand("bleu-by-length", "BLEU binned by source length");
    binned_cmd->add_option("--input", input, "hypothesis file")->required();
    binned_cmd->add_option("--reference", reference, "reference file")->required();
    binned_cmd->add_option("--source", source, "source file")->required();
    binned_cmd->add_option("--bin-width", bin_width, "source-length bin width");
    binned_cmd->add_option("--output", output, "CSV output")->required();

    auto* likert_cmd = app.add_subcommand("likert", "aggregate survey ratings");
    likert_cmd->add_option("--input", input, "ratings CSV")->required();
    likert_cmd->add_option("--output", output, "report file");

    std::vector<const char*> argv;
    argv.push_back("prose-forge");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        Config cfg;
        if (!config_path.empty()) cfg = Config::load(config_path);
        if (app.got_subcommand(train_transfer)) {
            if (*train_transfer->get_option("--attention")) cfg.set("attention", attention);
            if (pointer) cfg.set("pointer", "true");
            if (seed_given) cfg.set("seed", std::to_string(seed));
            log_config(cfg);
            return cmd_train_transfer(cfg,
                                      attention_from_name(cfg.get("attention", "global")),
                                      cfg.get_bool("pointer", false), output);
        }
        if (app.got_subcommand(train_poem_cmd)) {
            if (seed_given) cfg.set("seed", std::to_string(seed));
            log_config(cfg);
            return cmd_train_poem(cfg, input, output, cfg.get_u64("seed", 42));
        }
        if (app.got_subcommand(retrofit_cmd)) {
            return cmd_retrofit(input, lexicon_path, output, alpha, beta, iters);
        }
        if (app.got_subcommand(translate_cmd)) {
            return cmd_translate(model_path, input, output, max_len, attention_out);
        }
        if (app.got_subcommand(poem_cmd)) {
            return cmd_poem(poem_model_path, input, seed, output);
        }
        if (app.got_subcommand(prose_cmd)) {
            return cmd_prose(poem_model_path, model_path, input, seed, max_len, output);
        }
        if (app.got_subcommand(evaluate_cmd)) {
            return cmd_evaluate(input, reference, output);
        }
        if (app.got_subcommand(binned_cmd)) {
            return cmd_bleu_by_length(input, reference, source, bin_width, output);
        }
        if (app.got_subcommand(likert_cmd)) {
            return cmd_likert(input, output);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace proseforge
