#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "proseforge/corpus.hpp"
#include "proseforge/embeddings.hpp"
#include "proseforge/param.hpp"
#include "proseforge/pointer.hpp"
#include "proseforge/tape.hpp"

namespace proseforge {

enum class AttentionKind { Global, Bahdanau };

std::string attention_name(AttentionKind kind);
AttentionKind attention_from_name(const std::string& name);

struct ModelSpec {
    AttentionKind attention = AttentionKind::Global;
    bool pointer = false;
    int hidden_size = 0;
    int embedding_dim = 0;
    std::uint64_t seed = 42;
};

// Single-layer unidirectional LSTM encoder + LSTM decoder with a selectable
// attention variant, tied to one shared vocabulary. The optional pointer
// extension adds a generate/copy gate.
struct Seq2SeqModel {
    ModelSpec spec;
    Vocabulary vocab;

    Param embedding; // V x D, shared source/target
    Param enc_wx, enc_wh, enc_b;
    Param dec_wx, dec_wh, dec_b;
    Param attn_wa;                  // global: bilinear score
    Param attn_w1, attn_w2, attn_v; // bahdanau: additive score
    Param out_w, out_b;             // projection of [hidden; context]
    Param gate_w, gate_b;           // pointer gate

    int vocab_size() const { return vocab.size(); }
    int hidden() const { return spec.hidden_size; }
    int emb_dim() const { return spec.embedding_dim; }
    // D for global (context is fused after the cell), D + H for bahdanau
    // (context is part of the cell input).
    int decoder_input_dim() const;

    ParamRefs params();
    std::vector<std::pair<std::string, Param*>> named_params();
};

// Fresh model with seeded uniform [-0.08, 0.08] parameters and the given
// embedding rows.
Seq2SeqModel build_model(const Vocabulary& vocab, const EmbeddingMatrix& emb,
                         const ModelSpec& spec);

void save_model(Seq2SeqModel& model, const std::filesystem::path& path,
                const nlohmann::json& extra_meta = {});
Seq2SeqModel load_model(const std::filesystem::path& path);

// ---- value-level forward API ----

struct EncoderRun {
    std::vector<Matrix> outputs; // one hidden column per source position
    Matrix final_h, final_c;
};

struct AttentionResult {
    Matrix context;
    Matrix weights; // (source length x 1), sums to 1
};

struct DecodeState {
    Matrix h, c;
};

struct StepResult {
    Matrix logits; // vocab size x 1
    DecodeState state;
    Matrix weights;
    Matrix context;
};

EncoderRun encode(const Seq2SeqModel& model, const std::vector<int>& source_ids);

AttentionResult attend_global(const Seq2SeqModel& model, const Matrix& decoder_hidden,
                              const std::vector<Matrix>& encoder_outputs);
AttentionResult attend_bahdanau(const Seq2SeqModel& model, const Matrix& decoder_hidden_prev,
                                const std::vector<Matrix>& encoder_outputs);

DecodeState initial_state(const EncoderRun& run);

StepResult decode_step(const Seq2SeqModel& model, int prev_token_id,
                       const DecodeState& state, const EncoderRun& run);

// ---- tape-level graph builder (training and batch inference) ----

class Seq2SeqGraph {
public:
    // Trainable: gradients flow into the model's parameters on backward().
    Seq2SeqGraph(Tape& tape, Seq2SeqModel& model);
    // Frozen: parameters enter the tape as constants (read-only inference).
    Seq2SeqGraph(Tape& tape, const Seq2SeqModel& model);

    struct Encoded {
        std::vector<Var> outputs;
        Var matrix; // H x T, encoder outputs side by side
        Var h, c;   // final state
        int length = 0;
    };

    struct StepVars {
        Var h, c;
        Var context;
        Var weights;
        Var logits;
        Var input_emb;
    };

    Encoded encode(const std::vector<int>& source_ids);
    // Wraps precomputed encoder outputs as tape constants.
    Encoded bind_encoded(const EncoderRun& run);
    StepVars step(int prev_token_id, Var h_prev, Var c_prev, const Encoded& enc);

    // (context, weights) for the model's attention variant.
    std::pair<Var, Var> attend(Var query, const Encoded& enc);

    // Pointer path: extended distribution over vocab + source OOV slots.
    Var p_gen(const StepVars& sv);
    Var extended_distribution(const StepVars& sv, const ExtendedVocab& ext);

    Tape& tape() { return tape_; }

private:
    std::pair<Var, Var> lstm_cell(Var wx, Var wh, Var b, Var x, Var h, Var c);
    void bind_params(const Seq2SeqModel& model, Seq2SeqModel* trainable);

    Tape& tape_;
    const Seq2SeqModel& model_;
    Var emb_, enc_wx_, enc_wh_, enc_b_, dec_wx_, dec_wh_, dec_b_;
    Var attn_wa_, attn_w1_, attn_w2_, attn_v_;
    Var out_w_, out_b_;
    Var gate_w_, gate_b_;
};

} // namespace proseforge
