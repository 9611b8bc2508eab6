#include "proseforge/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "proseforge/errors.hpp"
#include "proseforge/optim.hpp"

namespace proseforge {

void TrainingConfig::validate() const {
    if (learning_rate <= 0.0) throw ParamError("config: learning_rate must be positive");
    if (epochs < 0) throw ParamError("config: epochs must be >= 0");
    if (batch_size <= 0) throw ParamError("config: batch_size must be positive");
    if (hidden_size < 0) throw ParamError("config: hidden_size must be positive");
    if (embedding_dim <= 0) throw ParamError("config: embedding_dim must be positive");
    if (max_sentence_length <= 0) throw ParamError("config: max_sentence_length must be positive");
    if (clip_norm < 0.0) throw ParamError("config: clip_norm must be >= 0");
}

int TrainingConfig::resolve_hidden(bool pointer) const {
    if (hidden_size > 0) return hidden_size;
    return pointer ? 256 : 1576;
}

nlohmann::json TrainingConfig::to_json() const {
    return nlohmann::json{
        {"learning_rate", learning_rate},
        {"epochs", epochs},
        {"batch_size", batch_size},
        {"hidden_size", hidden_size},
        {"embedding_dim", embedding_dim},
        {"seed", seed},
        {"max_sentence_length", max_sentence_length},
        {"clip_norm", clip_norm},
    };
}

double cross_entropy_loss(const Matrix& logits, const std::vector<int>& target_ids, int pad_id) {
    if (logits.rows != static_cast<int>(target_ids.size())) {
        throw ContractError("cross_entropy_loss: one logits row per target position required");
    }
    double total = 0.0;
    long n = 0;
    for (int t = 0; t < logits.rows; ++t) {
        const int gold = target_ids[t];
        if (gold == pad_id) continue;
        if (gold < 0 || gold >= logits.cols) {
            throw ContractError("cross_entropy_loss: target id out of range");
        }
        double mx = logits.at(t, 0);
        for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, logits.at(t, j));
        double z = 0.0;
        for (int j = 0; j < logits.cols; ++j) z += std::exp(logits.at(t, j) - mx);
        total += std::log(z) + mx - logits.at(t, gold);
        ++n;
    }
    if (n == 0) throw ContractError("cross_entropy_loss: every position is PAD, mean undefined");
    return total / static_cast<double>(n);
}

Var sentence_nll(Seq2SeqGraph& graph, const Seq2SeqModel& model, const SentencePair& pair,
                 long* token_count) {
    Tape& tape = graph.tape();
    const Vocabulary& vocab = model.vocab;
    const std::vector<int> source_ids = vocab.encode(pair.source);
    auto enc = graph.encode(source_ids);

    ExtendedVocab ext;
    if (model.spec.pointer) ext = build_extended(vocab, pair.source);

    std::vector<int> inputs;
    inputs.push_back(Vocabulary::kBos);
    for (const std::string& tok : pair.target) inputs.push_back(vocab.id(tok));
    std::vector<int> golds;
    for (const std::string& tok : pair.target) {
        golds.push_back(model.spec.pointer ? gold_extended_id(vocab, ext, tok) : vocab.id(tok));
    }
    golds.push_back(Vocabulary::kEos);

    Var h = enc.h;
    Var c = enc.c;
    std::vector<Var> step_losses;
    for (std::size_t t = 0; t < golds.size(); ++t) {
        auto sv = graph.step(inputs[t], h, c, enc);
        h = sv.h;
        c = sv.c;
        if (model.spec.pointer) {
            Var dist = graph.extended_distribution(sv, ext);
            step_losses.push_back(tape.scale(tape.log(tape.pick(dist, golds[t])), -1.0));
        } else {
            step_losses.push_back(tape.cross_entropy(sv.logits, golds[t]));
        }
    }
    *token_count += static_cast<long>(golds.size());
    return tape.add_all(step_losses);
}

double evaluate_loss(const Seq2SeqModel& model, const std::vector<SentencePair>& pairs) {
    double total = 0.0;
    long tokens = 0;
    for (const SentencePair& pair : pairs) {
        Tape tape;
        Seq2SeqGraph graph(tape, model); // frozen: no parameter bindings
        long n = 0;
        Var loss = sentence_nll(graph, model, pair, &n);
        total += tape.scalar(loss);
        tokens += n;
    }
    if (tokens == 0) return std::numeric_limits<double>::quiet_NaN();
    return total / static_cast<double>(tokens);
}

TrainArtifacts train(const ParallelCorpus& corpus, const TrainingConfig& config,
                     AttentionKind attention, bool pointer,
                     const Vocabulary& vocab, const EmbeddingMatrix& embeddings,
                     const std::filesystem::path& output_stem) {
    config.validate();
    if (corpus.train.empty()) throw ParamError("train: training corpus is empty");

    ModelSpec spec;
    spec.attention = attention;
    spec.pointer = pointer;
    spec.hidden_size = config.resolve_hidden(pointer);
    spec.embedding_dim = config.embedding_dim;
    spec.seed = config.seed;
    Seq2SeqModel model = build_model(vocab, embeddings, spec);
    const ParamRefs params = model.params();

    // Length-sorted bucketing: pairs over the length cap are dropped from
    // training only; batches keep a fixed composition and only their order is
    // reshuffled each epoch.
    std::vector<const SentencePair*> train_pairs;
    for (const SentencePair& p : corpus.train) {
        if (static_cast<int>(p.source.size()) > config.max_sentence_length) continue;
        if (static_cast<int>(p.target.size()) > config.max_sentence_length) continue;
        train_pairs.push_back(&p);
    }
    if (train_pairs.empty()) throw ParamError("train: no pairs under max_sentence_length");
    std::stable_sort(train_pairs.begin(), train_pairs.end(),
                     [](const SentencePair* a, const SentencePair* b) {
                         return a->source.size() < b->source.size();
                     });
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t i = 0; i < train_pairs.size(); i += config.batch_size) {
        batches.emplace_back(i, std::min(train_pairs.size(),
                                         i + static_cast<std::size_t>(config.batch_size)));
    }

    Adam optimizer(Adam::Options{config.learning_rate, 0.9, 0.999, 1e-8, config.clip_norm});
    Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ull);

    TrainArtifacts artifacts;
    artifacts.final_checkpoint = output_stem;
    artifacts.best_checkpoint = output_stem;
    artifacts.best_checkpoint += ".best";
    artifacts.metrics_log = output_stem;
    artifacts.metrics_log += ".metrics.tsv";
    artifacts.best_val_loss = std::numeric_limits<double>::infinity();

    std::ofstream metrics(artifacts.metrics_log);
    if (!metrics) throw IoError("cannot write " + artifacts.metrics_log.string());
    metrics << "epoch\ttrain_loss\tval_loss\twall_seconds\n";

    nlohmann::json extra;
    extra["training_config"] = config.to_json();

    if (config.epochs == 0) {
        save_model(model, artifacts.best_checkpoint, extra);
    }
    std::vector<std::size_t> order(batches.size());
    std::iota(order.begin(), order.end(), 0);
    long clip_before = 0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        // Fisher-Yates over batch order, seeded
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.below(static_cast<int>(i)));
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        long epoch_tokens = 0;
        for (std::size_t b : order) {
            Tape tape;
            Seq2SeqGraph graph(tape, model);
            std::vector<Var> sentence_losses;
            long batch_tokens = 0;
            for (std::size_t i = batches[b].first; i < batches[b].second; ++i) {
                sentence_losses.push_back(
                    sentence_nll(graph, model, *train_pairs[i], &batch_tokens));
            }
            Var total = tape.add_all(sentence_losses);
            Var loss = tape.scale(total, 1.0 / static_cast<double>(batch_tokens));
            const double loss_value = tape.scalar(loss);
            if (!std::isfinite(loss_value)) {
                std::ostringstream msg;
                msg << "training diverged: non-finite loss at epoch " << epoch
                    << " batch " << b;
                throw DivergenceError(msg.str());
            }
            zero_grads(params);
            tape.backward(loss);
            if (!grads_finite(params)) {
                std::ostringstream msg;
                msg << "training diverged: non-finite gradient at epoch " << epoch
                    << " batch " << b;
                throw DivergenceError(msg.str());
            }
            optimizer.step(params);
            epoch_loss += loss_value * static_cast<double>(batch_tokens);
            epoch_tokens += batch_tokens;
        }
        const double train_loss = epoch_loss / static_cast<double>(epoch_tokens);
        const double val_loss = corpus.val.empty() ? train_loss
                                                   : evaluate_loss(model, corpus.val);
        const auto end = std::chrono::steady_clock::now();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = train_loss;
        rec.val_loss = val_loss;
        rec.wall_seconds = std::chrono::duration<double>(end - start).count();
        rec.clip_events = static_cast<long>(optimizer.clip_events()) - clip_before;
        clip_before = static_cast<long>(optimizer.clip_events());
        artifacts.epochs.push_back(rec);
        metrics << rec.epoch << '\t' << rec.train_loss << '\t' << rec.val_loss << '\t'
                << rec.wall_seconds << '\n';
        metrics.flush();
        if (val_loss < artifacts.best_val_loss) {
            artifacts.best_val_loss = val_loss;
            save_model(model, artifacts.best_checkpoint, extra);
        }
    }
    save_model(model, artifacts.final_checkpoint, extra);
    return artifacts;
}

} // namespace proseforge
