#include "proseforge/pipeline.hpp"

#include <sstream>

namespace proseforge {

std::vector<std::string> PolicyPoemStage::poem_lines(const std::filesystem::path& image,
                                                     std::uint64_t seed) const {
    PaintingFeatures features = extract_features(image, extractors_);
    model_.policy.encode_clue(features);
    const SampledPoem poem = sample_poem(features, model_.policy, seed);
    std::vector<std::string> lines;
    for (const auto& line_tokens :
         split_poem_lines(poem.content_ids(), model_.policy.vocab)) {
        lines.push_back(join_tokens(line_tokens));
    }
    return lines;
}

std::string ProseResult::to_record() const {
    std::ostringstream out;
    out << "painting_id: " << painting_id << '\n';
    out << "seed: " << seed << '\n';
    out << "poem_lines: " << poem_lines.size() << '\n';
    for (const std::string& line : poem_lines) out << "poem: " << line << '\n';
    for (std::size_t i = 0; i < line_translations.size(); ++i) {
        const TranslationResult& tr = line_translations[i];
        out << "translation " << (i + 1) << ": " << join_tokens(tr.output_tokens) << '\n';
        out << "replacements " << (i + 1) << ":";
        if (tr.unk_positions_replaced.empty()) {
            out << " -";
        } else {
            for (const auto& [t, s] : tr.unk_positions_replaced) {
                out << ' ' << t << "->" << s;
            }
        }
        out << '\n';
    }
    out << "prose:\n" << prose << '\n';
    return out.str();
}

ProseResult paint_to_prose(const std::filesystem::path& image, const PoemStage& poem_stage,
                           const Seq2SeqModel& transfer_model, std::uint64_t seed,
                           int max_len) {
    ProseResult result;
    result.painting_id = image.stem().string();
    result.seed = seed;
    try {
        result.poem_lines = poem_stage.poem_lines(image, seed);
    } catch (const Error& e) {
        throw PipelineError("poem", e.what());
    }
    for (const std::string& line : result.poem_lines) {
        try {
            result.line_translations.push_back(translate(line, transfer_model, max_len));
        } catch (const Error& e) {
            throw PipelineError("transfer", std::string(e.what()) + " (line: " + line + ")",
                                result.poem_lines);
        }
    }
    std::string prose;
    for (std::size_t i = 0; i < result.line_translations.size(); ++i) {
        if (i > 0) prose += '\n';
        prose += join_tokens(result.line_translations[i].output_tokens);
    }
    result.prose = std::move(prose);
    return result;
}

} // namespace proseforge
