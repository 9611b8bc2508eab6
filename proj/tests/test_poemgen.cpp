#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "proseforge/errors.hpp"
#include "proseforge/optim.hpp"
#include "proseforge/poemgen.hpp"

#include "test_util.hpp"

using namespace proseforge;

namespace {

Vocabulary xyz_vocab() {
    std::vector<SentencePair> pairs{{tokenize("x y z"), tokenize("x y z")}};
    return Vocabulary::build(pairs, 1, 100);
}

PaintingFeatures fixed_features() {
    PaintingFeatures f;
    f.object_vector = {0.3};
    f.sentiment_vector = {-0.6};
    f.scene_vector = {};
    return f;
}

// Enumerable fixture: 3 content tokens, fixed length 2, EOS masked out.
PoemPolicy enumerable_policy(std::uint64_t seed = 33) {
    PoemPolicy p = build_policy(xyz_vocab(), 3, 3, 2, 2, seed);
    p.allow_eos = false;
    return p;
}

// Fixed reward table over the 9 enumerable sequences.
double table_reward(int first, int second) {
    static const double table[3][3] = {
        {0.9, 0.1, 0.4}, {0.2, 0.8, 0.5}, {0.7, 0.3, 0.6}};
    return table[first - 4][second - 4];
}

std::vector<std::vector<int>> enumerate_sequences() {
    std::vector<std::vector<int>> seqs;
    for (int a = 4; a < 7; ++a) {
        for (int b = 4; b < 7; ++b) seqs.push_back({a, b});
    }
    return seqs;
}

double expected_return(const PoemPolicy& policy, const PaintingFeatures& features) {
    double j = 0.0;
    for (const auto& seq : enumerate_sequences()) {
        j += std::exp(poem_log_prob_value(policy, features, seq)) *
             table_reward(seq[0], seq[1]);
    }
    return j;
}

// Exact gradient of the expected return via full enumeration.
void exact_return_gradient(PoemPolicy& policy, const PaintingFeatures& features) {
    zero_grads(policy.params());
    for (const auto& seq : enumerate_sequences()) {
        const double weight = std::exp(poem_log_prob_value(policy, features, seq)) *
                              table_reward(seq[0], seq[1]);
        Tape tape;
        PolicyGraph graph(tape, policy);
        tape.backward(tape.scale(graph.log_prob(features, seq), weight));
    }
}

} // namespace

TEST_CASE("toy extractor is a deterministic function of the image bytes") {
    testutil::TempDir dir("extract");
    testutil::write_file(dir.file("a.png"), "painting bytes one");
    testutil::write_file(dir.file("b.png"), "painting bytes two");
    const auto set = ExtractorSet::toy(5, 4, 3, 77);
    CHECK(set.total_dim() == 12);

    const auto f1 = extract_features(dir.file("a.png"), set);
    const auto f2 = extract_features(dir.file("a.png"), set);
    CHECK(f1.object_vector == f2.object_vector);
    CHECK(f1.sentiment_vector == f2.sentiment_vector);
    CHECK(f1.scene_vector == f2.scene_vector);

    const auto g = extract_features(dir.file("b.png"), set);
    CHECK(f1.object_vector != g.object_vector);

    CHECK(f1.object_vector.size() == 5);
    CHECK(f1.sentiment_vector.size() == 4);
    CHECK(f1.scene_vector.size() == 3);
    CHECK(f1.combined_dim() == 12);
    CHECK(f1.combined().size() == 12);
    for (double x : f1.combined()) {
        CHECK(x >= -1.0);
        CHECK(x <= 1.0);
    }
}

TEST_CASE("missing extractor role is a configuration error") {
    ExtractorSet set;
    set.register_extractor(FeatureRole::Object, std::make_shared<ToyHashExtractor>(4, 1));
    set.register_extractor(FeatureRole::Scene, std::make_shared<ToyHashExtractor>(4, 2));
    testutil::TempDir dir("roles");
    testutil::write_file(dir.file("img"), "bytes");
    CHECK_THROWS_AS(extract_features(dir.file("img"), set), ConfigError);
}

TEST_CASE("sample_poem is seeded, bounded and log-consistent") {
    PoemPolicy policy = build_policy(xyz_vocab(), 4, 3, 2, 6, 5);
    PaintingFeatures features = fixed_features();
    policy.encode_clue(features);
    CHECK(features.combined_clue.size() == 4);

    const auto a = sample_poem(features, policy, 123);
    const auto b = sample_poem(features, policy, 123);
    CHECK(a.actions == b.actions);
    CHECK(a.step_log_probs == b.step_log_probs);
    CHECK(a.actions.size() <= 6);
    REQUIRE(!a.actions.empty());

    // recorded log-probs sum to the policy's log-probability of the poem
    double recorded = 0.0;
    for (double lp : a.step_log_probs) recorded += lp;
    CHECK(recorded ==
          doctest::Approx(poem_log_prob_value(policy, features, a.actions)).epsilon(1e-9));

    const auto c = sample_poem(features, policy, 124);
    const auto d = sample_poem(features, policy, 125);
    CHECK((a.actions != c.actions || a.actions != d.actions));
}

TEST_CASE("policy step distributions normalize across random policies") {
    Rng rng(808);
    for (int trial = 0; trial < 200; ++trial) {
        PoemPolicy policy = build_policy(xyz_vocab(), 3, 3, 2, 4, rng.next_u64());
        policy.allow_eos = trial % 2 == 0;
        PaintingFeatures features = fixed_features();
        Tape tape;
        PolicyGraph graph(tape, std::as_const(policy));
        Var h = graph.initial_hidden(features);
        Var c = tape.leaf(Matrix(policy.hidden, 1));
        int prev = Vocabulary::kBos;
        for (int t = 0; t < 3; ++t) {
            const auto step = graph.step(prev, h, c);
            h = step.h;
            c = step.c;
            double sum = 0.0;
            for (double p : tape.val(step.dist).d) {
                CHECK(p >= 0.0);
                CHECK(p <= 1.0);
                sum += p;
            }
            CHECK(std::abs(sum - 1.0) < 1e-6);
            prev = 4;
        }
    }
}

TEST_CASE("reward combines the two scores with lambda") {
    const std::vector<int> poem{4, 5};
    const std::vector<double> clue{0.1, 0.2};

    const ConstantRewards stub(0.8, 0.4);
    const auto even = reward(poem, clue, stub, 0.5);
    CHECK(even.relevance == 0.8);
    CHECK(even.poeticness == 0.4);
    CHECK(even.combined == doctest::Approx(0.6));

    CHECK(reward(poem, clue, stub, 1.0).combined == doctest::Approx(0.8));
    CHECK(reward(poem, clue, stub, 0.0).combined == doctest::Approx(0.4));
    const auto other = reward(poem, clue, ConstantRewards(0.25, 0.75), 0.3);
    CHECK(other.combined == doctest::Approx(0.3 * 0.25 + 0.7 * 0.75));
    CHECK_THROWS_AS(reward(poem, clue, stub, 1.5), ParamError);
}

TEST_CASE("zero-advantage batches leave the policy bit-unchanged") {
    PoemPolicy policy = enumerable_policy();
    PaintingFeatures features = fixed_features();
    policy.encode_clue(features);

    std::vector<PolicySample> batch;
    Rng rng(6);
    for (int i = 0; i < 5; ++i) {
        PolicySample s;
        s.features = features;
        const auto poem = sample_poem(features, policy, rng.next_u64());
        s.actions = poem.actions;
        s.step_log_probs = poem.step_log_probs;
        s.reward = 0.7; // identical rewards: advantage is exactly zero
        batch.push_back(std::move(s));
    }
    const std::uint64_t before = params_hash(policy.params());
    policy_gradient_step(policy, batch, 0.1);
    CHECK(params_hash(policy.params()) == before);
}

TEST_CASE("expected-return gradient matches central finite differences") {
    PoemPolicy policy = enumerable_policy();
    PaintingFeatures features = fixed_features();

    exact_return_gradient(policy, features);
    for (Param* p : policy.params()) {
        CAPTURE(p->name);
        const Matrix analytic = p->grad;
        const auto fd = testutil::finite_diff(
            *p, [&] { return expected_return(policy, features); });
        for (std::size_t i = 0; i < fd.size(); ++i) {
            CAPTURE(i);
            CHECK(testutil::grads_close(analytic.d[i], fd[i]));
        }
    }
}

TEST_CASE("REINFORCE estimates are unbiased against the enumerated gradient") {
    PoemPolicy policy = enumerable_policy();
    PaintingFeatures features = fixed_features();
    exact_return_gradient(policy, features);
    std::vector<double> exact;
    for (Param* p : policy.params()) {
        exact.insert(exact.end(), p->grad.d.begin(), p->grad.d.end());
    }

    const int batches = 2000;
    const int batch_size = 10;
    std::vector<double> sum(exact.size(), 0.0);
    std::vector<double> sumsq(exact.size(), 0.0);
    Rng rng(314159);
    for (int b = 0; b < batches; ++b) {
        std::vector<PolicySample> batch;
        for (int i = 0; i < batch_size; ++i) {
            PolicySample s;
            s.features = features;
            const auto poem = sample_poem(features, policy, rng.next_u64());
            s.actions = poem.actions;
            s.step_log_probs = poem.step_log_probs;
            s.reward = table_reward(s.actions[0], s.actions[1]);
            batch.push_back(std::move(s));
        }
        zero_grads(policy.params());
        accumulate_policy_gradient(policy, batch);
        std::size_t k = 0;
        for (Param* p : policy.params()) {
            for (double g : p->grad.d) {
                const double estimate = -g; // ascent estimate
                sum[k] += estimate;
                sumsq[k] += estimate * estimate;
                ++k;
            }
        }
    }
    int checked = 0;
    for (std::size_t k = 0; k < exact.size(); ++k) {
        const double mean = sum[k] / batches;
        const double var = std::max(0.0, sumsq[k] / batches - mean * mean);
        const double se = std::sqrt(var / batches);
        CAPTURE(k);
        CHECK(std::abs(mean - exact[k]) <= 3.0 * se + 1e-12);
        if (se > 0.0) ++checked;
    }
    CHECK(checked > 50); // the bound is vacuous only for unused coordinates
}

TEST_CASE("discriminators separate a linearly separable fixture") {
    std::vector<SentencePair> pairs{{tokenize("good fair bad vile sun moon"),
                                     tokenize("good fair bad vile sun moon")}};
    const auto vocab = Vocabulary::build(pairs, 1, 100);

    std::vector<std::vector<int>> real;
    std::vector<std::vector<int>> generated;
    std::vector<std::vector<double>> clues;
    for (int i = 0; i < 8; ++i) {
        real.push_back(vocab.encode(i % 2 == 0 ? tokenize("good fair good")
                                               : tokenize("fair good fair")));
        generated.push_back(vocab.encode(i % 2 == 0 ? tokenize("bad vile bad")
                                                    : tokenize("vile bad vile")));
        clues.push_back({i % 2 == 0 ? 1.0 : -1.0, 0.5});
    }
    DiscriminatorConfig config;
    const auto discs = train_discriminators(real, generated, clues, vocab.size(), 2, config);

    int correct = 0;
    for (const auto& ids : real) {
        const double s = discs.poeticness(ids);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        if (s > 0.5) ++correct;
    }
    for (const auto& ids : generated) {
        if (discs.poeticness(ids) < 0.5) ++correct;
    }
    CHECK(correct >= 16 * 95 / 100 + 1); // > 95% accuracy

    CHECK_THROWS_AS(train_discriminators({}, generated, {}, vocab.size(), 2, config),
                    ValidationError);
    CHECK_THROWS_AS(train_discriminators(real, {}, clues, vocab.size(), 2, config),
                    ValidationError);
}

TEST_CASE("relevance scores matched pairs above mismatched pairs") {
    std::vector<SentencePair> pairs{{tokenize("sun moon fire frost"),
                                     tokenize("sun moon fire frost")}};
    const auto vocab = Vocabulary::build(pairs, 1, 100);
    // poem tokens correlate with the clue sign
    std::vector<std::vector<int>> real;
    std::vector<std::vector<double>> clues;
    for (int i = 0; i < 10; ++i) {
        real.push_back(vocab.encode(i % 2 == 0 ? tokenize("sun fire sun")
                                               : tokenize("moon frost moon")));
        clues.push_back({i % 2 == 0 ? 1.0 : -1.0});
    }
    DiscriminatorConfig config;
    config.epochs = 120;
    const auto discs = train_discriminators(real, real, clues, vocab.size(), 1, config);

    double matched = 0.0;
    double mismatched = 0.0;
    for (std::size_t i = 0; i < real.size(); ++i) {
        matched += discs.relevance(real[i], clues[i]);
        mismatched += discs.relevance(real[i], clues[(i + 1) % clues.size()]);
    }
    CHECK(matched / real.size() > mismatched / real.size());
}

TEST_CASE("poem corpus parsing and line rendering") {
    testutil::TempDir dir("poems");
    testutil::write_file(dir.file("poems.txt"),
                         "The sun rises\nover the hill\n\n\nMoonlight falls\n");
    const auto poems = load_poem_corpus(dir.file("poems.txt"));
    REQUIRE(poems.size() == 2);
    CHECK(poems[0] == std::vector<std::string>{"the", "sun", "rises", kEolToken, "over",
                                               "the", "hill", kEolToken});
    CHECK(poems[1] == std::vector<std::string>{"moonlight", "falls", kEolToken});

    const auto vocab = Vocabulary::build_from_sequences(poems, 1, 100);
    const auto lines = split_poem_lines(vocab.encode(poems[0]), vocab);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == std::vector<std::string>{"the", "sun", "rises"});
    CHECK(lines[1] == std::vector<std::string>{"over", "the", "hill"});
}

TEST_CASE("poem model checkpoint round trip is bit-exact") {
    testutil::TempDir dir("poemckpt");
    PoemModel model;
    model.policy = build_policy(xyz_vocab(), 5, 4, 6, 8, 21);
    model.discs = Discriminators(model.policy.vocab.size(), 5, 7, 22);
    model.lambda = 0.25;
    model.object_dim = 2;
    model.sentiment_dim = 2;
    model.scene_dim = 2;
    model.extractor_seed = 99;

    save_poem_model(model, dir.file("poem.ckpt"));
    auto loaded = load_poem_model(dir.file("poem.ckpt"));
    CHECK(loaded.lambda == model.lambda);
    CHECK(loaded.policy.vocab.tokens() == model.policy.vocab.tokens());
    CHECK(params_hash(loaded.policy.params()) == params_hash(model.policy.params()));
    auto a = model.discs.named_params();
    auto b = loaded.discs.named_params();
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].second->value == b[i].second->value);
    }

    save_poem_model(loaded, dir.file("again.ckpt"));
    std::ifstream f1(dir.file("poem.ckpt"), std::ios::binary);
    std::ifstream f2(dir.file("again.ckpt"), std::ios::binary);
    const std::string bytes1((std::istreambuf_iterator<char>(f1)), {});
    const std::string bytes2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(bytes1 == bytes2);
}

TEST_CASE("train_poem runs deterministically end to end") {
    testutil::TempDir dir("trainpoem");
    testutil::write_file(dir.file("p1.png"), "first painting");
    testutil::write_file(dir.file("p2.png"), "second painting");
    testutil::write_file(dir.file("p3.png"), "third painting");

    const std::vector<std::vector<std::string>> poems{
        {"the", "sun", "sets", kEolToken, "softly", "now", kEolToken},
        {"cold", "moon", "rises", kEolToken, "over", "water", kEolToken},
        {"wind", "sings", kEolToken, "through", "trees", kEolToken},
        {"light", "fades", kEolToken, "into", "dusk", kEolToken},
    };
    const std::vector<std::filesystem::path> paintings{
        dir.file("p1.png"), dir.file("p2.png"), dir.file("p3.png")};

    PoemTrainConfig config;
    config.rounds = 5;
    config.batch_size = 4;
    config.hidden = 8;
    config.emb_dim = 8;
    config.max_length = 8;
    config.object_dim = 3;
    config.sentiment_dim = 3;
    config.scene_dim = 3;
    config.disc_hidden = 6;
    config.seed = 2024;

    PoemModel first;
    const auto r1 = train_poem(poems, paintings, config, &first);
    PoemModel second;
    const auto r2 = train_poem(poems, paintings, config, &second);
    REQUIRE(r1.mean_rewards.size() == 5);
    CHECK(r1.mean_rewards == r2.mean_rewards);
    CHECK(params_hash(first.policy.params()) == params_hash(second.policy.params()));
    for (double r : r1.mean_rewards) {
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
    }

    // a trained model samples a renderable poem
    PaintingFeatures features = extract_features(paintings[0], first.extractors());
    first.policy.encode_clue(features);
    const auto poem = sample_poem(features, first.policy, 1);
    CHECK(poem.actions.size() <= 8);
}
