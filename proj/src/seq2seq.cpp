#include "proseforge/seq2seq.hpp"

#include <sstream>

#include "proseforge/checkpoint.hpp"
#include "proseforge/errors.hpp"

namespace proseforge {

std::string attention_name(AttentionKind kind) {
    return kind == AttentionKind::Global ? "global" : "bahdanau";
}

AttentionKind attention_from_name(const std::string& name) {
    if (name == "global") return AttentionKind::Global;
    if (name == "bahdanau") return AttentionKind::Bahdanau;
    throw ConfigError("unknown attention variant: " + name);
}

int Seq2SeqModel::decoder_input_dim() const {
    return spec.attention == AttentionKind::Bahdanau ? spec.embedding_dim + spec.hidden_size
                                                     : spec.embedding_dim;
}

std::vector<std::pair<std::string, Param*>> Seq2SeqModel::named_params() {
    std::vector<std::pair<std::string, Param*>> out;
    out.emplace_back("embedding", &embedding);
    out.emplace_back("encoder.w_x", &enc_wx);
    out.emplace_back("encoder.w_h", &enc_wh);
    out.emplace_back("encoder.b", &enc_b);
    out.emplace_back("decoder.w_x", &dec_wx);
    out.emplace_back("decoder.w_h", &dec_wh);
    out.emplace_back("decoder.b", &dec_b);
    if (spec.attention == AttentionKind::Global) {
        out.emplace_back("attention.w_a", &attn_wa);
    } else {
        out.emplace_back("attention.w_1", &attn_w1);
        out.emplace_back("attention.w_2", &attn_w2);
        out.emplace_back("attention.v", &attn_v);
    }
    out.emplace_back("output.w", &out_w);
    out.emplace_back("output.b", &out_b);
    if (spec.pointer) {
        out.emplace_back("gate.w", &gate_w);
        out.emplace_back("gate.b", &gate_b);
    }
    return out;
}

ParamRefs Seq2SeqModel::params() {
    ParamRefs refs;
    for (auto& [name, p] : named_params()) refs.push_back(p);
    return refs;
}

Seq2SeqModel build_model(const Vocabulary& vocab, const EmbeddingMatrix& emb,
                         const ModelSpec& spec) {
    if (spec.hidden_size <= 0) throw ParamError("build_model: hidden_size must be positive");
    if (spec.embedding_dim <= 0) throw ParamError("build_model: embedding_dim must be positive");
    if (emb.values.rows != vocab.size() || emb.dim != spec.embedding_dim) {
        throw ContractError("build_model: embedding matrix does not match vocab/dim");
    }
    const int H = spec.hidden_size;
    const int D = spec.embedding_dim;
    const int V = vocab.size();

    Seq2SeqModel m;
    m.spec = spec;
    m.vocab = vocab;
    m.embedding = Param("embedding", V, D);
    m.embedding.value = emb.values;
    m.enc_wx = Param("encoder.w_x", 4 * H, D);
    m.enc_wh = Param("encoder.w_h", 4 * H, H);
    m.enc_b = Param("encoder.b", 4 * H, 1);
    const int din = m.decoder_input_dim();
    m.dec_wx = Param("decoder.w_x", 4 * H, din);
    m.dec_wh = Param("decoder.w_h", 4 * H, H);
    m.dec_b = Param("decoder.b", 4 * H, 1);
    if (spec.attention == AttentionKind::Global) {
        m.attn_wa = Param("attention.w_a", H, H);
    } else {
        m.attn_w1 = Param("attention.w_1", H, H);
        m.attn_w2 = Param("attention.w_2", H, H);
        m.attn_v = Param("attention.v", H, 1);
    }
    m.out_w = Param("output.w", V, 2 * H);
    m.out_b = Param("output.b", V, 1);
    if (spec.pointer) {
        m.gate_w = Param("gate.w", 1, 2 * H + D);
        m.gate_b = Param("gate.b", 1, 1);
    }

    Rng rng(spec.seed);
    for (auto& [name, p] : m.named_params()) {
        if (name == "embedding") continue; // pretrained rows stay as given
        p->init_uniform(rng, -0.08, 0.08);
    }
    return m;
}

// ---- graph builder ----

Seq2SeqGraph::Seq2SeqGraph(Tape& tape, Seq2SeqModel& model) : tape_(tape), model_(model) {
    bind_params(model, &model);
}

Seq2SeqGraph::Seq2SeqGraph(Tape& tape, const Seq2SeqModel& model) : tape_(tape), model_(model) {
    bind_params(model, nullptr);
}

void Seq2SeqGraph::bind_params(const Seq2SeqModel& model, Seq2SeqModel* trainable) {
    auto bind = [&](const Param& cp, Param* tp) {
        return trainable ? tape_.leaf(*tp) : tape_.leaf(cp.value);
    };
    Seq2SeqModel* t = trainable;
    emb_ = bind(model.embedding, t ? &t->embedding : nullptr);
    enc_wx_ = bind(model.enc_wx, t ? &t->enc_wx : nullptr);
    enc_wh_ = bind(model.enc_wh, t ? &t->enc_wh : nullptr);
    enc_b_ = bind(model.enc_b, t ? &t->enc_b : nullptr);
    dec_wx_ = bind(model.dec_wx, t ? &t->dec_wx : nullptr);
    dec_wh_ = bind(model.dec_wh, t ? &t->dec_wh : nullptr);
    dec_b_ = bind(model.dec_b, t ? &t->dec_b : nullptr);
    if (model.spec.attention == AttentionKind::Global) {
        attn_wa_ = bind(model.attn_wa, t ? &t->attn_wa : nullptr);
    } else {
        attn_w1_ = bind(model.attn_w1, t ? &t->attn_w1 : nullptr);
        attn_w2_ = bind(model.attn_w2, t ? &t->attn_w2 : nullptr);
        attn_v_ = bind(model.attn_v, t ? &t->attn_v : nullptr);
    }
    out_w_ = bind(model.out_w, t ? &t->out_w : nullptr);
    out_b_ = bind(model.out_b, t ? &t->out_b : nullptr);
    if (model.spec.pointer) {
        gate_w_ = bind(model.gate_w, t ? &t->gate_w : nullptr);
        gate_b_ = bind(model.gate_b, t ? &t->gate_b : nullptr);
    }
}

std::pair<Var, Var> Seq2SeqGraph::lstm_cell(Var wx, Var wh, Var b, Var x, Var h, Var c) {
    const int H = model_.hidden();
    Var z = tape_.add(tape_.add(tape_.matmul(wx, x), tape_.matmul(wh, h)), b);
    Var i = tape_.sigmoid(tape_.slice_rows(z, 0, H));
    Var f = tape_.sigmoid(tape_.slice_rows(z, H, 2 * H));
    Var g = tape_.tanh(tape_.slice_rows(z, 2 * H, 3 * H));
    Var o = tape_.sigmoid(tape_.slice_rows(z, 3 * H, 4 * H));
    Var c_new = tape_.add(tape_.hadamard(f, c), tape_.hadamard(i, g));
    Var h_new = tape_.hadamard(o, tape_.tanh(c_new));
    return {h_new, c_new};
}

Seq2SeqGraph::Encoded Seq2SeqGraph::encode(const std::vector<int>& source_ids) {
    if (source_ids.empty()) throw ParamError("encode: source must be non-empty");
    const int H = model_.hidden();
    Encoded enc;
    enc.length = static_cast<int>(source_ids.size());
    Var h = tape_.leaf(Matrix(H, 1));
    Var c = tape_.leaf(Matrix(H, 1));
    for (int id : source_ids) {
        Var x = tape_.lookup_row(emb_, id);
        auto [h2, c2] = lstm_cell(enc_wx_, enc_wh_, enc_b_, x, h, c);
        h = h2;
        c = c2;
        enc.outputs.push_back(h);
    }
    enc.matrix = tape_.concat_cols(enc.outputs);
    enc.h = h;
    enc.c = c;
    return enc;
}

Seq2SeqGraph::Encoded Seq2SeqGraph::bind_encoded(const EncoderRun& run) {
    if (run.outputs.empty()) throw ParamError("bind_encoded: no encoder outputs");
    Encoded enc;
    enc.length = static_cast<int>(run.outputs.size());
    for (const Matrix& m : run.outputs) enc.outputs.push_back(tape_.leaf(m));
    enc.matrix = tape_.concat_cols(enc.outputs);
    enc.h = tape_.leaf(run.final_h);
    enc.c = tape_.leaf(run.final_c);
    return enc;
}

std::pair<Var, Var> Seq2SeqGraph::attend(Var query, const Encoded& enc) {
    Var scores;
    if (model_.spec.attention == AttentionKind::Global) {
        // score_s = h_t^T W_a e_s
        Var q = tape_.matmul_ta(attn_wa_, query);
        scores = tape_.matmul_ta(enc.matrix, q);
    } else {
        // score_s = v^T tanh(W1 e_s + W2 h_prev)
        Var m = tape_.matmul(attn_w1_, enc.matrix);
        Var u = tape_.matmul(attn_w2_, query);
        Var t = tape_.tanh(tape_.add_col_broadcast(m, u));
        scores = tape_.matmul_ta(t, attn_v_);
    }
    Var weights = tape_.softmax_col(scores);
    Var context = tape_.matmul(enc.matrix, weights);
    return {context, weights};
}

Seq2SeqGraph::StepVars Seq2SeqGraph::step(int prev_token_id, Var h_prev, Var c_prev,
                                          const Encoded& enc) {
    StepVars sv;
    sv.input_emb = tape_.lookup_row(emb_, prev_token_id);
    if (model_.spec.attention == AttentionKind::Global) {
        auto [h, c] = lstm_cell(dec_wx_, dec_wh_, dec_b_, sv.input_emb, h_prev, c_prev);
        sv.h = h;
        sv.c = c;
        auto [context, weights] = attend(sv.h, enc);
        sv.context = context;
        sv.weights = weights;
    } else {
        // attention from the prior step's state; context joins the cell input
        auto [context, weights] = attend(h_prev, enc);
        sv.context = context;
        sv.weights = weights;
        Var x = tape_.concat_rows({sv.input_emb, sv.context});
        auto [h, c] = lstm_cell(dec_wx_, dec_wh_, dec_b_, x, h_prev, c_prev);
        sv.h = h;
        sv.c = c;
    }
    Var fused = tape_.concat_rows({sv.h, sv.context});
    sv.logits = tape_.add(tape_.matmul(out_w_, fused), out_b_);
    return sv;
}

Var Seq2SeqGraph::p_gen(const StepVars& sv) {
    if (!model_.spec.pointer) throw ContractError("p_gen: model has no pointer extension");
    Var z = tape_.concat_rows({sv.context, sv.h, sv.input_emb});
    return tape_.sigmoid(tape_.add(tape_.matmul(gate_w_, z), gate_b_));
}

Var Seq2SeqGraph::extended_distribution(const StepVars& sv, const ExtendedVocab& ext) {
    Var vocab_probs = tape_.softmax_col(sv.logits);
    Var gate = p_gen(sv);
    return tape_.pointer_mix(gate, vocab_probs, sv.weights, ext.source_ext_ids, ext.size());
}

// ---- value-level wrappers ----

EncoderRun encode(const Seq2SeqModel& model, const std::vector<int>& source_ids) {
    Tape tape;
    Seq2SeqGraph graph(tape, model);
    auto enc = graph.encode(source_ids);
    EncoderRun run;
    for (Var v : enc.outputs) run.outputs.push_back(tape.val(v));
    run.final_h = tape.val(enc.h);
    run.final_c = tape.val(enc.c);
    return run;
}

namespace {

AttentionResult attend_values(const Seq2SeqModel& model, const Matrix& query,
                              const std::vector<Matrix>& encoder_outputs) {
    if (encoder_outputs.empty()) throw ParamError("attend: encoder outputs must be non-empty");
    Tape tape;
    Seq2SeqGraph graph(tape, model);
    EncoderRun run;
    run.outputs = encoder_outputs;
    run.final_h = encoder_outputs.back();
    run.final_c = Matrix(encoder_outputs.back().rows, 1);
    auto enc = graph.bind_encoded(run);
    auto [context, weights] = graph.attend(tape.leaf(query), enc);
    return AttentionResult{tape.val(context), tape.val(weights)};
}

} // namespace

AttentionResult attend_global(const Seq2SeqModel& model, const Matrix& decoder_hidden,
                              const std::vector<Matrix>& encoder_outputs) {
    if (model.spec.attention != AttentionKind::Global) {
        throw ContractError("attend_global: model uses a different attention variant");
    }
    return attend_values(model, decoder_hidden, encoder_outputs);
}

AttentionResult attend_bahdanau(const Seq2SeqModel& model, const Matrix& decoder_hidden_prev,
                                const std::vector<Matrix>& encoder_outputs) {
    if (model.spec.attention != AttentionKind::Bahdanau) {
        throw ContractError("attend_bahdanau: model uses a different attention variant");
    }
    return attend_values(model, decoder_hidden_prev, encoder_outputs);
}

DecodeState initial_state(const EncoderRun& run) {
    return DecodeState{run.final_h, run.final_c};
}

StepResult decode_step(const Seq2SeqModel& model, int prev_token_id,
                       const DecodeState& state, const EncoderRun& run) {
    Tape tape;
    Seq2SeqGraph graph(tape, model);
    auto enc = graph.bind_encoded(run);
    auto sv = graph.step(prev_token_id, tape.leaf(state.h), tape.leaf(state.c), enc);
    StepResult out;
    out.logits = tape.val(sv.logits);
    out.state = DecodeState{tape.val(sv.h), tape.val(sv.c)};
    out.weights = tape.val(sv.weights);
    out.context = tape.val(sv.context);
    return out;
}

// ---- checkpointing ----

void save_model(Seq2SeqModel& model, const std::filesystem::path& path,
                const nlohmann::json& extra_meta) {
    nlohmann::json meta;
    meta["format"] = 1;
    meta["kind"] = "transfer";
    meta["attention"] = attention_name(model.spec.attention);
    meta["pointer"] = model.spec.pointer;
    meta["hidden_size"] = model.spec.hidden_size;
    meta["embedding_dim"] = model.spec.embedding_dim;
    meta["seed"] = model.spec.seed;
    meta["vocab"] = model.vocab.tokens();
    std::ostringstream hash_hex;
    hash_hex << std::hex << model.vocab.hash();
    meta["vocab_hash"] = hash_hex.str();
    if (!extra_meta.is_null()) {
        for (auto it = extra_meta.begin(); it != extra_meta.end(); ++it) {
            meta[it.key()] = it.value();
        }
    }
    std::vector<checkpoint::NamedTensor> tensors;
    for (auto& [name, p] : model.named_params()) {
        tensors.emplace_back(name, &p->value);
    }
    checkpoint::save(path, meta, tensors);
}

Seq2SeqModel load_model(const std::filesystem::path& path) {
    auto ar = checkpoint::load(path);
    if (ar.meta.value("kind", "") != "transfer") {
        throw FormatError(path.string() + ": not a style-transfer checkpoint");
    }
    ModelSpec spec;
    spec.attention = attention_from_name(ar.meta.at("attention").get<std::string>());
    spec.pointer = ar.meta.at("pointer").get<bool>();
    spec.hidden_size = ar.meta.at("hidden_size").get<int>();
    spec.embedding_dim = ar.meta.at("embedding_dim").get<int>();
    spec.seed = ar.meta.value("seed", 0ull);
    Vocabulary vocab = Vocabulary::from_tokens(ar.meta.at("vocab").get<std::vector<std::string>>());

    EmbeddingMatrix emb;
    emb.dim = spec.embedding_dim;
    emb.values = Matrix(vocab.size(), spec.embedding_dim);
    Seq2SeqModel model = build_model(vocab, emb, spec);
    for (auto& [name, p] : model.named_params()) {
        const Matrix& t = ar.tensor(name);
        if (t.rows != p->value.rows || t.cols != p->value.cols) {
            throw FormatError("checkpoint tensor " + name + " has unexpected shape");
        }
        p->value = t;
    }
    return model;
}

} // namespace proseforge
