#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace proseforge {

// One aligned modern/Shakespearean sentence pair, already tokenized.
struct SentencePair {
    std::vector<std::string> source; // modern English
    std::vector<std::string> target; // Shakespearean
};

// Lowercases, splits punctuation into separate tokens and collapses
// whitespace. Apostrophes stay inside words ("o'er", "'tis" keeps the
// leading mark attached). Bytes >= 0x80 are treated as word characters so
// UTF-8 sequences survive intact.
std::vector<std::string> tokenize(std::string_view sentence);

// Reads two aligned one-sentence-per-line files. Lines blank on both sides
// are dropped; a line blank on exactly one side is an alignment error, as is
// a line-count mismatch.
std::vector<SentencePair> load_parallel(const std::filesystem::path& source_path,
                                        const std::filesystem::path& target_path);

// Token/id bijection shared between source and target sides.
// Ids 0..3 are reserved for PAD, UNK, BOS, EOS in that order.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;

    Vocabulary();

    // Pools counts over both sides of the pairs, drops tokens below
    // min_count, caps at max_size entries including the reserved four.
    // Frequency ties break lexicographically.
    static Vocabulary build(const std::vector<SentencePair>& pairs,
                            int min_count, int max_size);
    static Vocabulary build_from_sequences(const std::vector<std::vector<std::string>>& sequences,
                                           int min_count, int max_size);
    // Reconstructs a vocabulary from tokens in id order (reserved included).
    static Vocabulary from_tokens(const std::vector<std::string>& tokens);

    int id(const std::string& token) const; // kUnk when missing
    const std::string& token(int id) const;
    bool contains(const std::string& token) const;
    int size() const { return static_cast<int>(id_to_token_.size()); }
    const std::vector<std::string>& tokens() const { return id_to_token_; }

    std::vector<int> encode(const std::vector<std::string>& tokens,
                            bool add_bos = false, bool add_eos = false) const;
    std::vector<std::string> decode(const std::vector<int>& ids) const;

    // FNV-1a over the token list; stored in checkpoints to detect mismatches.
    std::uint64_t hash() const;

    // One token per line, line number = id.
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

private:
    void add(const std::string& token);

    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
};

// Shakespearean <-> modern word pairs, lowercase and deduplicated.
class Lexicon {
public:
    // Tab-separated file: shakespearean TAB modern, one pair per line.
    static Lexicon load(const std::filesystem::path& path);
    static Lexicon from_pairs(std::vector<std::pair<std::string, std::string>> pairs);

    const std::vector<std::pair<std::string, std::string>>& pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }

private:
    std::vector<std::pair<std::string, std::string>> pairs_;
};

// Train/val/test splits as provided by the corpus distribution.
struct ParallelCorpus {
    std::vector<SentencePair> train;
    std::vector<SentencePair> val;
    std::vector<SentencePair> test;

    static ParallelCorpus load(const std::filesystem::path& train_src,
                               const std::filesystem::path& train_tgt,
                               const std::filesystem::path& val_src,
                               const std::filesystem::path& val_tgt,
                               const std::filesystem::path& test_src,
                               const std::filesystem::path& test_tgt);
};

} // namespace proseforge
