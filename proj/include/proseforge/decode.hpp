#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "proseforge/seq2seq.hpp"

namespace proseforge {

struct TranslationResult {
    std::vector<std::string> output_tokens;
    // One row per decode step executed, including the step that produced EOS;
    // rows sum to 1 over source positions.
    Matrix attention;
    std::vector<std::string> source_tokens;
    // (output index, source index) of every UNK substitution applied.
    std::vector<std::pair<int, int>> unk_positions_replaced;
};

// Greedy decoding from BOS until EOS or max_len steps. Pointer models take
// the argmax over the extended distribution, so copied source tokens appear
// verbatim. UNK replacement is applied before returning.
TranslationResult translate(const std::string& source, const Seq2SeqModel& model,
                            int max_len = 60);

// Replaces each UNK output token with the source token under the argmax of
// its attention row; ties break toward the lowest source index. Requires one
// attention row per output token.
std::vector<std::string> replace_unks(const std::vector<std::string>& output_tokens,
                                      const Matrix& attention,
                                      const std::vector<std::string>& source_tokens,
                                      std::vector<std::pair<int, int>>* replacements = nullptr);

std::string join_tokens(const std::vector<std::string>& tokens);

// One translation per input line; blank lines pass through blank. The
// optional sidecar records one attention matrix block per sentence.
void translate_file(const Seq2SeqModel& model, const std::filesystem::path& input,
                    const std::filesystem::path& output, int max_len,
                    const std::optional<std::filesystem::path>& attention_sidecar = {});

} // namespace proseforge
