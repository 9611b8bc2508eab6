#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "proseforge/corpus.hpp"
#include "proseforge/param.hpp"
#include "proseforge/tape.hpp"

namespace proseforge {

// Line-break marker inside flattened poem token sequences.
inline constexpr const char* kEolToken = "<eol>";

enum class FeatureRole { Object, Sentiment, Scene };

std::string role_name(FeatureRole role);

class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::vector<double> extract(const std::filesystem::path& image) const = 0;
    virtual int dim() const = 0;
};

// Deterministic offline extractor: a seeded hash of the image bytes expanded
// into a fixed-dimension vector in [-1, 1].
class ToyHashExtractor : public FeatureExtractor {
public:
    ToyHashExtractor(int dim, std::uint64_t salt) : dim_(dim), salt_(salt) {}
    std::vector<double> extract(const std::filesystem::path& image) const override;
    int dim() const override { return dim_; }

private:
    int dim_;
    std::uint64_t salt_;
};

class ExtractorSet {
public:
    void register_extractor(FeatureRole role, std::shared_ptr<FeatureExtractor> extractor);
    const FeatureExtractor& at(FeatureRole role) const; // ConfigError when missing
    bool has(FeatureRole role) const;
    int total_dim() const;

    static ExtractorSet toy(int object_dim, int sentiment_dim, int scene_dim,
                            std::uint64_t seed);

private:
    std::shared_ptr<FeatureExtractor> object_, sentiment_, scene_;
};

struct PaintingFeatures {
    std::vector<double> object_vector;
    std::vector<double> sentiment_vector;
    std::vector<double> scene_vector;
    // Filled by PoemPolicy::encode_clue: the learned projection of the
    // concatenated role vectors.
    std::vector<double> combined_clue;

    std::vector<double> combined() const; // concatenation, pre-projection
    int combined_dim() const;
};

PaintingFeatures extract_features(const std::filesystem::path& image,
                                  const ExtractorSet& extractors);

// Recurrent generator conditioned on the projected clue vector. The initial
// hidden state is the clue; PAD/BOS/UNK are never sampled and EOS only when
// allow_eos is set.
struct PoemPolicy {
    Vocabulary vocab;
    int hidden = 0;
    int emb_dim = 0;
    int feature_dim = 0;
    int max_length = 0;
    bool allow_eos = true;

    Param clue_w, clue_b; // projection: combined features -> initial hidden
    Param embedding;
    Param cell_wx, cell_wh, cell_b;
    Param out_w, out_b;

    ParamRefs params();
    std::vector<std::pair<std::string, Param*>> named_params();
    std::vector<int> allowed_ids() const;
    // tanh(clue_w * combined + clue_b); also stores it on the features.
    std::vector<double> encode_clue(PaintingFeatures& features) const;
};

PoemPolicy build_policy(const Vocabulary& vocab, int hidden, int emb_dim,
                        int feature_dim, int max_length, std::uint64_t seed);

struct SampledPoem {
    // Every sampled action in order; ends with EOS when sampling stopped
    // there rather than at max_length.
    std::vector<int> actions;
    std::vector<double> step_log_probs;

    std::vector<int> content_ids() const; // actions minus a trailing EOS
};

SampledPoem sample_poem(const PaintingFeatures& features, const PoemPolicy& policy,
                        std::uint64_t seed);

// Teacher-forced log pi(actions | features) on a tape; gradients reach the
// policy parameters when it was bound trainable.
class PolicyGraph {
public:
    PolicyGraph(Tape& tape, PoemPolicy& policy);
    PolicyGraph(Tape& tape, const PoemPolicy& policy);

    Var log_prob(const PaintingFeatures& features, const std::vector<int>& actions);
    // Distribution over allowed ids for one step (used by property tests).
    struct StepOut {
        Var dist;
        Var h, c;
    };
    Var initial_hidden(const PaintingFeatures& features);
    StepOut step(int prev_id, Var h, Var c);

private:
    void bind(const PoemPolicy& policy, PoemPolicy* trainable);

    Tape& tape_;
    const PoemPolicy& policy_;
    std::vector<int> allowed_;
    Var clue_w_, clue_b_, emb_, wx_, wh_, b_, out_w_, out_b_;
};

double poem_log_prob_value(const PoemPolicy& policy, const PaintingFeatures& features,
                           const std::vector<int>& actions);

// ---- rewards ----

struct RewardPair {
    double relevance = 0.0;
    double poeticness = 0.0;
    double combined = 0.0;
};

class RewardModel {
public:
    virtual ~RewardModel() = default;
    virtual double relevance(const std::vector<int>& poem_ids,
                             const std::vector<double>& clue) const = 0;
    virtual double poeticness(const std::vector<int>& poem_ids) const = 0;
};

class ConstantRewards : public RewardModel {
public:
    ConstantRewards(double rel, double poet) : rel_(rel), poet_(poet) {}
    double relevance(const std::vector<int>&, const std::vector<double>&) const override {
        return rel_;
    }
    double poeticness(const std::vector<int>&) const override { return poet_; }

private:
    double rel_, poet_;
};

RewardPair reward(const std::vector<int>& poem_ids, const std::vector<double>& clue,
                  const RewardModel& model, double lambda);

// One-hidden-layer tanh MLP with a sigmoid output.
struct Mlp {
    Param w1, b1, w2, b2;
    int input_dim = 0;
    int hidden = 0;

    static Mlp build(const std::string& prefix, int input_dim, int hidden, Rng& rng);
    double score(const std::vector<double>& x) const;
    ParamRefs params();
};

// Relevance: classifier over [poem bag; clue]. Poeticness: poem bag alone.
class Discriminators : public RewardModel {
public:
    Discriminators() = default;
    Discriminators(int vocab_size, int clue_dim, int hidden, std::uint64_t seed);

    double relevance(const std::vector<int>& poem_ids,
                     const std::vector<double>& clue) const override;
    double poeticness(const std::vector<int>& poem_ids) const override;

    // Binary-classification epochs: poeticness on real vs generated poems,
    // relevance on own-clue vs rotated-clue pairs over the real poems.
    void update(const std::vector<std::vector<int>>& real_poems,
                const std::vector<std::vector<double>>& real_clues,
                const std::vector<std::vector<int>>& generated_poems,
                int epochs, double lr);

    std::vector<double> bag_encoding(const std::vector<int>& poem_ids) const;
    int vocab_size() const { return vocab_size_; }
    int clue_dim() const { return clue_dim_; }
    std::vector<std::pair<std::string, Param*>> named_params();

private:
    int vocab_size_ = 0;
    int clue_dim_ = 0;
    Mlp relevance_;
    Mlp poeticness_;
};

struct DiscriminatorConfig {
    int hidden = 16;
    int epochs = 40;
    double lr = 0.2;
    std::uint64_t seed = 99;
};

Discriminators train_discriminators(const std::vector<std::vector<int>>& real_poems,
                                    const std::vector<std::vector<int>>& generated_poems,
                                    const std::vector<std::vector<double>>& real_clues,
                                    int vocab_size, int clue_dim,
                                    const DiscriminatorConfig& config);

// ---- policy gradient ----

struct PolicySample {
    PaintingFeatures features;
    std::vector<int> actions;
    std::vector<double> step_log_probs;
    double reward = 0.0;
};

// REINFORCE with a leave-one-out batch-mean baseline, accumulated into the
// policy parameter gradients (ascent direction negated for sgd_step).
void accumulate_policy_gradient(PoemPolicy& policy, const std::vector<PolicySample>& batch);

// Zero-advantage batches leave the parameters bit-unchanged.
void policy_gradient_step(PoemPolicy& policy, const std::vector<PolicySample>& batch,
                          double learning_rate);

// ---- corpus, checkpointing, outer loop ----

// Poems separated by blank lines, one poem line per text line; returns token
// sequences with an <eol> marker closing every line.
std::vector<std::vector<std::string>> load_poem_corpus(const std::filesystem::path& path);

std::vector<std::vector<std::string>> split_poem_lines(const std::vector<int>& content_ids,
                                                       const Vocabulary& vocab);

struct PoemModel {
    PoemPolicy policy;
    Discriminators discs;
    double lambda = 0.5;
    int object_dim = 0;
    int sentiment_dim = 0;
    int scene_dim = 0;
    std::uint64_t extractor_seed = 0;

    ExtractorSet extractors() const {
        return ExtractorSet::toy(object_dim, sentiment_dim, scene_dim, extractor_seed);
    }
};

void save_poem_model(PoemModel& model, const std::filesystem::path& path,
                     const nlohmann::json& extra_meta = {});
PoemModel load_poem_model(const std::filesystem::path& path);

struct PoemTrainConfig {
    int rounds = 40;
    int batch_size = 8;
    double policy_lr = 0.05;
    double disc_lr = 0.2;
    int disc_epochs = 2;
    int disc_pretrain_epochs = 30;
    int disc_hidden = 16;
    double lambda = 0.5;
    int hidden = 32;
    int emb_dim = 16;
    int max_length = 16;
    int object_dim = 8;
    int sentiment_dim = 8;
    int scene_dim = 8;
    int min_count = 1;
    int max_vocab = 4000;
    std::uint64_t seed = 42;
};

struct PoemTrainResult {
    std::vector<double> mean_rewards; // one per round
};

// Alternates discriminator updates with policy-gradient updates.
PoemTrainResult train_poem(const std::vector<std::vector<std::string>>& poems,
                           const std::vector<std::filesystem::path>& paintings,
                           const PoemTrainConfig& config, PoemModel* out);

} // namespace proseforge
