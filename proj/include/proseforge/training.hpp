#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "proseforge/corpus.hpp"
#include "proseforge/embeddings.hpp"
#include "proseforge/seq2seq.hpp"

namespace proseforge {

struct TrainingConfig {
    double learning_rate = 1e-3;
    int epochs = 25;
    int batch_size = 64;
    int hidden_size = 0; // 0 resolves to the variant default below
    int embedding_dim = 192;
    std::uint64_t seed = 42;
    int max_sentence_length = 50;
    double clip_norm = 5.0;

    void validate() const;
    // 1,576 hidden units for the plain model, 256 with the pointer extension.
    int resolve_hidden(bool pointer) const;
    nlohmann::json to_json() const;
};

// Mean over non-PAD positions of -log softmax(logits_t)[target_t].
// logits has one row per target position.
double cross_entropy_loss(const Matrix& logits, const std::vector<int>& target_ids, int pad_id);

// Teacher-forced negative log-likelihood of one pair, summed over target
// positions, built on the graph's tape. Gold tokens outside the vocabulary
// map to UNK for the plain model and to source OOV slots for the pointer
// model.
Var sentence_nll(Seq2SeqGraph& graph, const Seq2SeqModel& model, const SentencePair& pair,
                 long* token_count);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double wall_seconds = 0.0;
    long clip_events = 0;
};

struct TrainArtifacts {
    std::filesystem::path final_checkpoint;
    std::filesystem::path best_checkpoint;
    std::filesystem::path metrics_log;
    std::vector<EpochRecord> epochs;
    double best_val_loss = 0.0;
};

// Teacher-forced loss over pairs; read-only on the model.
double evaluate_loss(const Seq2SeqModel& model, const std::vector<SentencePair>& pairs);

// Teacher-forced maximum-likelihood training. Saves the final checkpoint at
// output_stem and the best-validation checkpoint at output_stem + ".best";
// the per-epoch metrics log goes to output_stem + ".metrics.tsv".
// Fully deterministic for a fixed config and seed.
TrainArtifacts train(const ParallelCorpus& corpus, const TrainingConfig& config,
                     AttentionKind attention, bool pointer,
                     const Vocabulary& vocab, const EmbeddingMatrix& embeddings,
                     const std::filesystem::path& output_stem);

} // namespace proseforge
