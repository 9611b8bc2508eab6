#pragma once

#include <string>
#include <vector>

#include "proseforge/corpus.hpp"
#include "proseforge/matrix.hpp"

namespace proseforge {

// Per-sentence extension of the vocabulary with the source's out-of-vocab
// tokens, numbered base_size, base_size+1, ... in first-occurrence order.
struct ExtendedVocab {
    int base_size = 0;                   // vocabulary size
    std::vector<int> source_ext_ids;     // per source position
    std::vector<std::string> oov_tokens; // extended slots in order

    int size() const { return base_size + static_cast<int>(oov_tokens.size()); }
    bool is_extended(int ext_id) const { return ext_id >= base_size; }
    const std::string& oov_token(int ext_id) const { return oov_tokens.at(ext_id - base_size); }
};

ExtendedVocab build_extended(const Vocabulary& vocab,
                             const std::vector<std::string>& source_tokens);

// Extended id of a gold target token: vocabulary id if known, the source's
// extended slot if copied, UNK otherwise.
int gold_extended_id(const Vocabulary& vocab, const ExtendedVocab& ext,
                     const std::string& token);

// p_gen = sigmoid(w . [context; decoder_hidden; input_embedding] + b).
// w is a (1 x total) row.
double generation_gate(const Matrix& context, const Matrix& decoder_hidden,
                       const Matrix& input_embedding, const Matrix& w, double b);

// Probability that each extended token is copied: attention mass summed over
// the source positions holding that token.
std::vector<double> copy_distribution(const std::vector<double>& attention_weights,
                                      const ExtendedVocab& ext);

// P(w) = p_gen * P_vocab(w) + (1 - p_gen) * P_copy(w); vocabulary mass is
// zero on extended-only slots.
std::vector<double> mix(double p_gen, const std::vector<double>& vocab_dist,
                        const std::vector<double>& copy_dist);

} // namespace proseforge
