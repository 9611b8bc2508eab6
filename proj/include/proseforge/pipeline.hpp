#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "proseforge/decode.hpp"
#include "proseforge/errors.hpp"
#include "proseforge/poemgen.hpp"
#include "proseforge/seq2seq.hpp"

namespace proseforge {

// Stage failure carrying the stage name and whatever the poem stage had
// produced so far.
struct PipelineError : Error {
    std::string stage;
    std::vector<std::string> partial_poem;

    PipelineError(std::string stage_name, const std::string& message,
                  std::vector<std::string> poem_so_far = {})
        : Error("stage " + stage_name + ": " + message),
          stage(std::move(stage_name)),
          partial_poem(std::move(poem_so_far)) {}
};

// Painting id, intermediate poem, per-line translations and the final prose.
struct ProseResult {
    std::string painting_id;
    std::uint64_t seed = 0;
    std::vector<std::string> poem_lines;
    std::vector<TranslationResult> line_translations;
    std::string prose;

    // Structured text record; field order is fixed (see README).
    std::string to_record() const;
};

// Poem source abstraction so a fixed poem can stand in for the policy.
class PoemStage {
public:
    virtual ~PoemStage() = default;
    virtual std::vector<std::string> poem_lines(const std::filesystem::path& image,
                                                std::uint64_t seed) const = 0;
};

class PolicyPoemStage : public PoemStage {
public:
    explicit PolicyPoemStage(const PoemModel& model)
        : model_(model), extractors_(model.extractors()) {}
    std::vector<std::string> poem_lines(const std::filesystem::path& image,
                                        std::uint64_t seed) const override;

private:
    const PoemModel& model_;
    ExtractorSet extractors_;
};

class FixedPoemStage : public PoemStage {
public:
    explicit FixedPoemStage(std::vector<std::string> lines) : lines_(std::move(lines)) {}
    std::vector<std::string> poem_lines(const std::filesystem::path&,
                                        std::uint64_t) const override {
        return lines_;
    }

private:
    std::vector<std::string> lines_;
};

// Poem once, then each line translated independently with UNK replacement.
ProseResult paint_to_prose(const std::filesystem::path& image, const PoemStage& poem_stage,
                           const Seq2SeqModel& transfer_model, std::uint64_t seed,
                           int max_len = 60);

} // namespace proseforge
