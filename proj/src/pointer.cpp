#include "proseforge/pointer.hpp"

#include <cmath>
#include <unordered_map>

#include "proseforge/errors.hpp"

namespace proseforge {

ExtendedVocab build_extended(const Vocabulary& vocab,
                             const std::vector<std::string>& source_tokens) {
    ExtendedVocab ext;
    ext.base_size = vocab.size();
    ext.source_ext_ids.reserve(source_tokens.size());
    std::unordered_map<std::string, int> oov_slots;
    for (const std::string& tok : source_tokens) {
        if (vocab.contains(tok)) {
            ext.source_ext_ids.push_back(vocab.id(tok));
            continue;
        }
        auto it = oov_slots.find(tok);
        if (it == oov_slots.end()) {
            const int slot = ext.base_size + static_cast<int>(ext.oov_tokens.size());
            oov_slots.emplace(tok, slot);
            ext.oov_tokens.push_back(tok);
            ext.source_ext_ids.push_back(slot);
        } else {
            ext.source_ext_ids.push_back(it->second);
        }
    }
    return ext;
}

int gold_extended_id(const Vocabulary& vocab, const ExtendedVocab& ext,
                     const std::string& token) {
    if (vocab.contains(token)) return vocab.id(token);
    for (std::size_t k = 0; k < ext.oov_tokens.size(); ++k) {
        if (ext.oov_tokens[k] == token) return ext.base_size + static_cast<int>(k);
    }
    return Vocabulary::kUnk;
}

double generation_gate(const Matrix& context, const Matrix& decoder_hidden,
                       const Matrix& input_embedding, const Matrix& w, double b) {
    const int total = context.rows + decoder_hidden.rows + input_embedding.rows;
    if (w.rows != 1 || w.cols != total) {
        throw ContractError("generation_gate: weight shape does not match inputs");
    }
    double z = b;
    int j = 0;
    for (int i = 0; i < context.rows; ++i) z += w.at(0, j++) * context.at(i, 0);
    for (int i = 0; i < decoder_hidden.rows; ++i) z += w.at(0, j++) * decoder_hidden.at(i, 0);
    for (int i = 0; i < input_embedding.rows; ++i) z += w.at(0, j++) * input_embedding.at(i, 0);
    return 1.0 / (1.0 + std::exp(-z));
}

std::vector<double> copy_distribution(const std::vector<double>& attention_weights,
                                      const ExtendedVocab& ext) {
    if (attention_weights.size() != ext.source_ext_ids.size()) {
        throw ContractError("copy_distribution: weights/source length mismatch");
    }
    std::vector<double> dist(ext.size(), 0.0);
    for (std::size_t s = 0; s < attention_weights.size(); ++s) {
        dist[ext.source_ext_ids[s]] += attention_weights[s];
    }
    return dist;
}

std::vector<double> mix(double p_gen, const std::vector<double>& vocab_dist,
                        const std::vector<double>& copy_dist) {
    if (p_gen < 0.0 || p_gen > 1.0) throw ParamError("mix: p_gen outside [0, 1]");
    if (copy_dist.size() < vocab_dist.size()) {
        throw ContractError("mix: copy distribution shorter than vocabulary");
    }
    std::vector<double> out(copy_dist.size(), 0.0);
    for (std::size_t i = 0; i < vocab_dist.size(); ++i) out[i] = p_gen * vocab_dist[i];
    for (std::size_t i = 0; i < copy_dist.size(); ++i) out[i] += (1.0 - p_gen) * copy_dist[i];
    return out;
}

} // namespace proseforge
