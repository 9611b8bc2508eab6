#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "proseforge/corpus.hpp"
#include "proseforge/embeddings.hpp"
#include "proseforge/param.hpp"
#include "proseforge/seq2seq.hpp"
#include "proseforge/training.hpp"

namespace testutil {

// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0;; ++i) {
            auto candidate = base / ("proseforge_" + tag + "_" + std::to_string(i));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                break;
            }
        }
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// 50 distinct pairs over a tiny shared vocabulary; every word occurs often
// enough to clear min_count 2.
inline proseforge::ParallelCorpus toy_corpus(int pairs = 50) {
    static const std::vector<std::string> subjects{
        "king", "queen", "lord", "lady", "fool",
        "knave", "friar", "witch", "prince", "page"};
    static const std::vector<std::string> verbs{
        "sings", "weeps", "dreams", "marches", "prays"};
    static const std::vector<std::string> verbs_sh{
        "singeth", "weepeth", "dreameth", "marcheth", "prayeth"};
    proseforge::ParallelCorpus corpus;
    for (int i = 0; i < pairs; ++i) {
        const std::string& subj = subjects[i % subjects.size()];
        const std::string& verb = verbs[(i / subjects.size()) % verbs.size()];
        const std::string& verb_sh = verbs_sh[(i / subjects.size()) % verbs_sh.size()];
        proseforge::SentencePair p;
        p.source = proseforge::tokenize("the " + subj + " " + verb + " now .");
        p.target = proseforge::tokenize("now doth the " + subj + " " + verb_sh + " .");
        corpus.train.push_back(std::move(p));
    }
    return corpus;
}

// Small trained model memorizing the toy corpus; shared setup for decode and
// pipeline tests.
inline proseforge::Seq2SeqModel overfit_model(const proseforge::ParallelCorpus& corpus,
                                              const TempDir& dir,
                                              proseforge::AttentionKind attention,
                                              bool pointer, int epochs,
                                              proseforge::TrainingConfig* out_config = nullptr,
                                              int min_count = 2) {
    proseforge::TrainingConfig tc;
    tc.learning_rate = 1e-2;
    tc.epochs = epochs;
    tc.batch_size = 2;
    tc.hidden_size = 48;
    tc.embedding_dim = 16;
    tc.seed = 7;
    const auto vocab = proseforge::Vocabulary::build(corpus.train, min_count, 12000);
    const auto emb = proseforge::random_embeddings(vocab, tc.embedding_dim, tc.seed);
    const auto artifacts = proseforge::train(corpus, tc, attention, pointer, vocab, emb,
                                             dir.file("overfit.ckpt"));
    if (out_config) *out_config = tc;
    return proseforge::load_model(artifacts.final_checkpoint);
}

// Central finite differences of `loss` with respect to every entry of p.
inline std::vector<double> finite_diff(proseforge::Param& p,
                                       const std::function<double()>& loss,
                                       double h = 1e-5) {
    std::vector<double> grads(p.value.size());
    for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double saved = p.value.d[i];
        const double step = h * std::max(1.0, std::abs(saved));
        p.value.d[i] = saved + step;
        const double up = loss();
        p.value.d[i] = saved - step;
        const double down = loss();
        p.value.d[i] = saved;
        grads[i] = (up - down) / (2.0 * step);
    }
    return grads;
}

// Relative agreement with an absolute floor for near-zero gradients.
inline bool grads_close(double a, double b, double rel = 1e-3, double floor = 1e-8) {
    const double diff = std::abs(a - b);
    return diff <= rel * std::max(std::abs(a), std::abs(b)) + floor;
}

} // namespace testutil
