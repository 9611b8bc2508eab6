#include "proseforge/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "proseforge/errors.hpp"

namespace proseforge {

namespace {

bool is_word_char(unsigned char c) {
    return std::isalnum(c) || c == '\'' || c >= 0x80;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

} // namespace

std::vector<std::string> tokenize(std::string_view sentence) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : sentence) {
        if (std::isspace(c)) {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
        } else if (is_word_char(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
            tokens.emplace_back(1, static_cast<char>(c));
        }
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

std::vector<SentencePair> load_parallel(const std::filesystem::path& source_path,
                                        const std::filesystem::path& target_path) {
    const auto src_lines = read_lines(source_path);
    const auto tgt_lines = read_lines(target_path);
    if (src_lines.size() != tgt_lines.size()) {
        std::ostringstream msg;
        msg << "line count mismatch: " << source_path.string() << " has " << src_lines.size()
            << " lines, " << target_path.string() << " has " << tgt_lines.size();
        throw AlignmentError(msg.str());
    }
    std::vector<SentencePair> pairs;
    pairs.reserve(src_lines.size());
    for (std::size_t i = 0; i < src_lines.size(); ++i) {
        SentencePair p{tokenize(src_lines[i]), tokenize(tgt_lines[i])};
        if (p.source.empty() && p.target.empty()) continue;
        if (p.source.empty() || p.target.empty()) {
            std::ostringstream msg;
            msg << "line " << (i + 1) << " is blank on exactly one side";
            throw AlignmentError(msg.str());
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

Vocabulary::Vocabulary() {
    add("<pad>");
    add("<unk>");
    add("<bos>");
    add("<eos>");
}

void Vocabulary::add(const std::string& token) {
    token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
    id_to_token_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<SentencePair>& pairs,
                             int min_count, int max_size) {
    std::vector<std::vector<std::string>> sequences;
    sequences.reserve(pairs.size() * 2);
    for (const SentencePair& p : pairs) {
        sequences.push_back(p.source);
        sequences.push_back(p.target);
    }
    return build_from_sequences(sequences, min_count, max_size);
}

Vocabulary Vocabulary::build_from_sequences(const std::vector<std::vector<std::string>>& sequences,
                                            int min_count, int max_size) {
    if (min_count < 1) throw ParamError("build_vocab: min_count must be >= 1");
    if (max_size <= 4) throw ParamError("build_vocab: max_size must exceed the 4 reserved slots");
    std::unordered_map<std::string, long> counts;
    for (const auto& seq : sequences) {
        for (const std::string& t : seq) ++counts[t];
    }
    std::vector<std::pair<std::string, long>> ranked;
    ranked.reserve(counts.size());
    for (auto& [tok, n] : counts) {
        if (n >= min_count) ranked.emplace_back(tok, n);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary vocab;
    const std::size_t cap = static_cast<std::size_t>(max_size) - 4;
    for (std::size_t i = 0; i < ranked.size() && i < cap; ++i) {
        vocab.add(ranked[i].first);
    }
    return vocab;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
    static const std::vector<std::string> reserved{"<pad>", "<unk>", "<bos>", "<eos>"};
    if (tokens.size() < 4) throw FormatError("vocabulary is missing reserved tokens");
    for (int i = 0; i < 4; ++i) {
        if (tokens[i] != reserved[i]) {
            throw FormatError("vocabulary reserved token mismatch at id " + std::to_string(i));
        }
    }
    Vocabulary vocab;
    for (std::size_t i = 4; i < tokens.size(); ++i) vocab.add(tokens[i]);
    if (vocab.token_to_id_.size() != tokens.size()) {
        throw FormatError("vocabulary contains duplicate tokens");
    }
    return vocab;
}

int Vocabulary::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    return id_to_token_.at(id);
}

bool Vocabulary::contains(const std::string& token) const {
    return token_to_id_.count(token) != 0;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens,
                                    bool add_bos, bool add_eos) const {
    std::vector<int> ids;
    ids.reserve(tokens.size() + 2);
    if (add_bos) ids.push_back(kBos);
    for (const std::string& t : tokens) ids.push_back(id(t));
    if (add_eos) ids.push_back(kEos);
    return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
    std::vector<std::string> tokens;
    tokens.reserve(ids.size());
    for (int i : ids) tokens.push_back(token(i));
    return tokens;
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (const std::string& t : id_to_token_) {
        for (unsigned char c : t) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= static_cast<unsigned char>('\n');
        h *= 1099511628211ull;
    }
    return h;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const std::string& t : id_to_token_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    return from_tokens(read_lines(path));
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw FormatError("lexicon line " + std::to_string(lineno) +
                              ": expected exactly two tab-separated fields");
        }
        pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return from_pairs(std::move(pairs));
}

Lexicon Lexicon::from_pairs(std::vector<std::pair<std::string, std::string>> pairs) {
    Lexicon lex;
    for (auto& [a, b] : pairs) {
        std::transform(a.begin(), a.end(), a.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        std::transform(b.begin(), b.end(), b.begin(),
                       [](unsigned char c) { return std::tolower(c); });
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    lex.pairs_ = std::move(pairs);
    return lex;
}

ParallelCorpus ParallelCorpus::load(const std::filesystem::path& train_src,
                                    const std::filesystem::path& train_tgt,
                                    const std::filesystem::path& val_src,
                                    const std::filesystem::path& val_tgt,
                                    const std::filesystem::path& test_src,
                                    const std::filesystem::path& test_tgt) {
    ParallelCorpus corpus;
    corpus.train = load_parallel(train_src, train_tgt);
    corpus.val = load_parallel(val_src, val_tgt);
    corpus.test = load_parallel(test_src, test_tgt);
    return corpus;
}

} // namespace proseforge
