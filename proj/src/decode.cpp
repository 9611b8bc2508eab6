#include "proseforge/decode.hpp"

#include <fstream>
#include <sstream>

#include "proseforge/errors.hpp"
#include "proseforge/pointer.hpp"

namespace proseforge {

namespace {

int argmax_lowest(const Matrix& column) {
    int best = 0;
    for (int i = 1; i < column.rows; ++i) {
        if (column.at(i, 0) > column.at(best, 0)) best = i;
    }
    return best;
}

int argmax_row_lowest(const Matrix& m, int row) {
    int best = 0;
    for (int j = 1; j < m.cols; ++j) {
        if (m.at(row, j) > m.at(row, best)) best = j;
    }
    return best;
}

} // namespace

std::vector<std::string> replace_unks(const std::vector<std::string>& output_tokens,
                                      const Matrix& attention,
                                      const std::vector<std::string>& source_tokens,
                                      std::vector<std::pair<int, int>>* replacements) {
    if (attention.rows != static_cast<int>(output_tokens.size())) {
        throw ContractError("replace_unks: need one attention row per output token");
    }
    if (attention.rows > 0 && attention.cols != static_cast<int>(source_tokens.size())) {
        throw ContractError("replace_unks: attention columns do not match source length");
    }
    std::vector<std::string> out = output_tokens;
    for (int t = 0; t < static_cast<int>(out.size()); ++t) {
        if (out[t] != "<unk>") continue;
        const int s = argmax_row_lowest(attention, t);
        out[t] = source_tokens[s];
        if (replacements) replacements->emplace_back(t, s);
    }
    return out;
}

TranslationResult translate(const std::string& source, const Seq2SeqModel& model,
                            int max_len) {
    if (max_len <= 0) throw ParamError("translate: max_len must be positive");
    TranslationResult result;
    result.source_tokens = tokenize(source);
    if (result.source_tokens.empty()) {
        throw ValidationError("translate: source is empty after tokenization");
    }
    const Vocabulary& vocab = model.vocab;
    const std::vector<int> source_ids = vocab.encode(result.source_tokens);

    ExtendedVocab ext;
    if (model.spec.pointer) ext = build_extended(vocab, result.source_tokens);

    Tape tape;
    Seq2SeqGraph graph(tape, model); // frozen parameters
    auto enc = graph.encode(source_ids);
    Var h = enc.h;
    Var c = enc.c;

    std::vector<Matrix> weight_rows;
    int prev = Vocabulary::kBos;
    for (int t = 0; t < max_len; ++t) {
        auto sv = graph.step(prev, h, c, enc);
        h = sv.h;
        c = sv.c;
        weight_rows.push_back(tape.val(sv.weights));
        int choice;
        if (model.spec.pointer) {
            Var dist = graph.extended_distribution(sv, ext);
            choice = argmax_lowest(tape.val(dist));
        } else {
            choice = argmax_lowest(tape.val(sv.logits));
        }
        if (choice == Vocabulary::kEos) break;
        if (model.spec.pointer && ext.is_extended(choice)) {
            result.output_tokens.push_back(ext.oov_token(choice));
            prev = Vocabulary::kUnk; // copied tokens have no embedding row
        } else {
            result.output_tokens.push_back(vocab.token(choice));
            prev = choice;
        }
    }

    result.attention = Matrix(static_cast<int>(weight_rows.size()),
                              static_cast<int>(result.source_tokens.size()));
    for (std::size_t r = 0; r < weight_rows.size(); ++r) {
        for (int s = 0; s < result.attention.cols; ++s) {
            result.attention.at(static_cast<int>(r), s) = weight_rows[r].at(s, 0);
        }
    }

    // The EOS step contributes a row but no output token; UNK replacement
    // only sees the rows paired with emitted tokens.
    Matrix emitted(static_cast<int>(result.output_tokens.size()), result.attention.cols);
    for (int r = 0; r < emitted.rows; ++r) {
        for (int s = 0; s < emitted.cols; ++s) emitted.at(r, s) = result.attention.at(r, s);
    }
    result.output_tokens = replace_unks(result.output_tokens, emitted, result.source_tokens,
                                        &result.unk_positions_replaced);
    return result;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out += ' ';
        out += tokens[i];
    }
    return out;
}

void translate_file(const Seq2SeqModel& model, const std::filesystem::path& input,
                    const std::filesystem::path& output, int max_len,
                    const std::optional<std::filesystem::path>& attention_sidecar) {
    std::ifstream in(input);
    if (!in) throw IoError("cannot open " + input.string());
    std::ofstream out(output);
    if (!out) throw IoError("cannot write " + output.string());
    std::ofstream side;
    if (attention_sidecar) {
        side.open(*attention_sidecar);
        if (!side) throw IoError("cannot write " + attention_sidecar->string());
    }
    std::string line;
    std::size_t index = 0;
    while (std::getline(in, line)) {
        ++index;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (tokenize(line).empty()) {
            out << '\n';
            if (attention_sidecar) side << "# sentence " << index << " rows 0 cols 0\n\n";
            continue;
        }
        TranslationResult r = translate(line, model, max_len);
        out << join_tokens(r.output_tokens) << '\n';
        if (attention_sidecar) {
            side << "# sentence " << index << " rows " << r.attention.rows
                 << " cols " << r.attention.cols << '\n';
            side.precision(17);
            for (int i = 0; i < r.attention.rows; ++i) {
                for (int j = 0; j < r.attention.cols; ++j) {
                    if (j > 0) side << ' ';
                    side << r.attention.at(i, j);
                }
                side << '\n';
            }
            side << '\n';
        }
    }
}

} // namespace proseforge
