#include "proseforge/poemgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "proseforge/checkpoint.hpp"
#include "proseforge/errors.hpp"
#include "proseforge/optim.hpp"

namespace proseforge {

std::string role_name(FeatureRole role) {
    switch (role) {
        case FeatureRole::Object: return "object";
        case FeatureRole::Sentiment: return "sentiment";
        case FeatureRole::Scene: return "scene";
    }
    return "?";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t hash_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    return h;
}

} // namespace

std::vector<double> ToyHashExtractor::extract(const std::filesystem::path& image) const {
    const std::uint64_t base = hash_file_bytes(image) ^ salt_;
    std::vector<double> out(dim_);
    for (int i = 0; i < dim_; ++i) {
        const std::uint64_t bits = splitmix64(base + static_cast<std::uint64_t>(i) * 0x100000001b3ull);
        const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
        out[i] = 2.0 * u - 1.0;
    }
    return out;
}

void ExtractorSet::register_extractor(FeatureRole role,
                                      std::shared_ptr<FeatureExtractor> extractor) {
    switch (role) {
        case FeatureRole::Object: object_ = std::move(extractor); break;
        case FeatureRole::Sentiment: sentiment_ = std::move(extractor); break;
        case FeatureRole::Scene: scene_ = std::move(extractor); break;
    }
}

bool ExtractorSet::has(FeatureRole role) const {
    switch (role) {
        case FeatureRole::Object: return object_ != nullptr;
        case FeatureRole::Sentiment: return sentiment_ != nullptr;
        case FeatureRole::Scene: return scene_ != nullptr;
    }
    return false;
}

const FeatureExtractor& ExtractorSet::at(FeatureRole role) const {
    const std::shared_ptr<FeatureExtractor>* ptr = nullptr;
    switch (role) {
        case FeatureRole::Object: ptr = &object_; break;
        case FeatureRole::Sentiment: ptr = &sentiment_; break;
        case FeatureRole::Scene: ptr = &scene_; break;
    }
    if (!ptr || !*ptr) throw ConfigError("no extractor registered for role " + role_name(role));
    return **ptr;
}

int ExtractorSet::total_dim() const {
    return at(FeatureRole::Object).dim() + at(FeatureRole::Sentiment).dim() +
           at(FeatureRole::Scene).dim();
}

ExtractorSet ExtractorSet::toy(int object_dim, int sentiment_dim, int scene_dim,
                               std::uint64_t seed) {
    ExtractorSet set;
    set.register_extractor(FeatureRole::Object,
                           std::make_shared<ToyHashExtractor>(object_dim, seed ^ 0x6f626au));
    set.register_extractor(FeatureRole::Sentiment,
                           std::make_shared<ToyHashExtractor>(sentiment_dim, seed ^ 0x73656eu));
    set.register_extractor(FeatureRole::Scene,
                           std::make_shared<ToyHashExtractor>(scene_dim, seed ^ 0x736375u));
    return set;
}

std::vector<double> PaintingFeatures::combined() const {
    std::vector<double> out;
    out.reserve(object_vector.size() + sentiment_vector.size() + scene_vector.size());
    out.insert(out.end(), object_vector.begin(), object_vector.end());
    out.insert(out.end(), sentiment_vector.begin(), sentiment_vector.end());
    out.insert(out.end(), scene_vector.begin(), scene_vector.end());
    return out;
}

int PaintingFeatures::combined_dim() const {
    return static_cast<int>(object_vector.size() + sentiment_vector.size() +
                            scene_vector.size());
}

PaintingFeatures extract_features(const std::filesystem::path& image,
                                  const ExtractorSet& extractors) {
    PaintingFeatures f;
    f.object_vector = extractors.at(FeatureRole::Object).extract(image);
    f.sentiment_vector = extractors.at(FeatureRole::Sentiment).extract(image);
    f.scene_vector = extractors.at(FeatureRole::Scene).extract(image);
    return f;
}

// ---- policy ----

std::vector<std::pair<std::string, Param*>> PoemPolicy::named_params() {
    return {
        {"clue.w", &clue_w},   {"clue.b", &clue_b}, {"embedding", &embedding},
        {"cell.w_x", &cell_wx}, {"cell.w_h", &cell_wh}, {"cell.b", &cell_b},
        {"output.w", &out_w},  {"output.b", &out_b},
    };
}

ParamRefs PoemPolicy::params() {
    ParamRefs refs;
    for (auto& [name, p] : named_params()) refs.push_back(p);
    return refs;
}

std::vector<int> PoemPolicy::allowed_ids() const {
    std::vector<int> allowed;
    if (allow_eos) allowed.push_back(Vocabulary::kEos);
    for (int id = 4; id < vocab.size(); ++id) allowed.push_back(id);
    if (allowed.empty()) throw ContractError("policy vocabulary has no sampleable tokens");
    return allowed;
}

std::vector<double> PoemPolicy::encode_clue(PaintingFeatures& features) const {
    if (features.combined_dim() != feature_dim) {
        throw ContractError("encode_clue: feature dimension mismatch");
    }
    const std::vector<double> x = features.combined();
    std::vector<double> clue(hidden, 0.0);
    for (int i = 0; i < hidden; ++i) {
        double z = clue_b.value.at(i, 0);
        for (int j = 0; j < feature_dim; ++j) z += clue_w.value.at(i, j) * x[j];
        clue[i] = std::tanh(z);
    }
    features.combined_clue = clue;
    return clue;
}

PoemPolicy build_policy(const Vocabulary& vocab, int hidden, int emb_dim,
                        int feature_dim, int max_length, std::uint64_t seed) {
    if (hidden <= 0 || emb_dim <= 0 || feature_dim <= 0 || max_length <= 0) {
        throw ParamError("build_policy: dimensions must be positive");
    }
    PoemPolicy p;
    p.vocab = vocab;
    p.hidden = hidden;
    p.emb_dim = emb_dim;
    p.feature_dim = feature_dim;
    p.max_length = max_length;
    const int V = vocab.size();
    p.clue_w = Param("clue.w", hidden, feature_dim);
    p.clue_b = Param("clue.b", hidden, 1);
    p.embedding = Param("embedding", V, emb_dim);
    p.cell_wx = Param("cell.w_x", 4 * hidden, emb_dim);
    p.cell_wh = Param("cell.w_h", 4 * hidden, hidden);
    p.cell_b = Param("cell.b", 4 * hidden, 1);
    p.out_w = Param("output.w", V, hidden);
    p.out_b = Param("output.b", V, 1);
    Rng rng(seed);
    for (auto& [name, param] : p.named_params()) {
        param->init_uniform(rng, -0.08, 0.08);
    }
    return p;
}

PolicyGraph::PolicyGraph(Tape& tape, PoemPolicy& policy) : tape_(tape), policy_(policy) {
    bind(policy, &policy);
}

PolicyGraph::PolicyGraph(Tape& tape, const PoemPolicy& policy) : tape_(tape), policy_(policy) {
    bind(policy, nullptr);
}

void PolicyGraph::bind(const PoemPolicy& policy, PoemPolicy* trainable) {
    allowed_ = policy.allowed_ids();
    auto bind_one = [&](const Param& cp, Param* tp) {
        return trainable ? tape_.leaf(*tp) : tape_.leaf(cp.value);
    };
    PoemPolicy* t = trainable;
    clue_w_ = bind_one(policy.clue_w, t ? &t->clue_w : nullptr);
    clue_b_ = bind_one(policy.clue_b, t ? &t->clue_b : nullptr);
    emb_ = bind_one(policy.embedding, t ? &t->embedding : nullptr);
    wx_ = bind_one(policy.cell_wx, t ? &t->cell_wx : nullptr);
    wh_ = bind_one(policy.cell_wh, t ? &t->cell_wh : nullptr);
    b_ = bind_one(policy.cell_b, t ? &t->cell_b : nullptr);
    out_w_ = bind_one(policy.out_w, t ? &t->out_w : nullptr);
    out_b_ = bind_one(policy.out_b, t ? &t->out_b : nullptr);
}

Var PolicyGraph::initial_hidden(const PaintingFeatures& features) {
    if (features.combined_dim() != policy_.feature_dim) {
        throw ContractError("policy: feature dimension mismatch");
    }
    Var f = tape_.leaf(Matrix::column(features.combined()));
    return tape_.tanh(tape_.add(tape_.matmul(clue_w_, f), clue_b_));
}

PolicyGraph::StepOut PolicyGraph::step(int prev_id, Var h, Var c) {
    const int H = policy_.hidden;
    Var x = tape_.lookup_row(emb_, prev_id);
    Var z = tape_.add(tape_.add(tape_.matmul(wx_, x), tape_.matmul(wh_, h)), b_);
    Var i = tape_.sigmoid(tape_.slice_rows(z, 0, H));
    Var f = tape_.sigmoid(tape_.slice_rows(z, H, 2 * H));
    Var g = tape_.tanh(tape_.slice_rows(z, 2 * H, 3 * H));
    Var o = tape_.sigmoid(tape_.slice_rows(z, 3 * H, 4 * H));
    Var c_new = tape_.add(tape_.hadamard(f, c), tape_.hadamard(i, g));
    Var h_new = tape_.hadamard(o, tape_.tanh(c_new));
    Var logits = tape_.add(tape_.matmul(out_w_, h_new), out_b_);
    Var masked = tape_.gather(logits, allowed_);
    StepOut out;
    out.dist = tape_.softmax_col(masked);
    out.h = h_new;
    out.c = c_new;
    return out;
}

Var PolicyGraph::log_prob(const PaintingFeatures& features, const std::vector<int>& actions) {
    Var h = initial_hidden(features);
    Var c = tape_.leaf(Matrix(policy_.hidden, 1));
    int prev = Vocabulary::kBos;
    std::vector<Var> logs;
    for (int action : actions) {
        auto so = step(prev, h, c);
        h = so.h;
        c = so.c;
        const auto it = std::find(allowed_.begin(), allowed_.end(), action);
        if (it == allowed_.end()) throw ContractError("log_prob: action not sampleable");
        const int k = static_cast<int>(it - allowed_.begin());
        logs.push_back(tape_.log(tape_.pick(so.dist, k)));
        prev = action;
    }
    if (logs.empty()) throw ContractError("log_prob: empty action sequence");
    return tape_.add_all(logs);
}

double poem_log_prob_value(const PoemPolicy& policy, const PaintingFeatures& features,
                           const std::vector<int>& actions) {
    Tape tape;
    PolicyGraph graph(tape, policy);
    return tape.scalar(graph.log_prob(features, actions));
}

SampledPoem sample_poem(const PaintingFeatures& features, const PoemPolicy& policy,
                        std::uint64_t seed) {
    Tape tape;
    PolicyGraph graph(tape, policy);
    const std::vector<int> allowed = policy.allowed_ids();
    Rng rng(seed);
    SampledPoem poem;
    Var h = graph.initial_hidden(features);
    Var c = tape.leaf(Matrix(policy.hidden, 1));
    int prev = Vocabulary::kBos;
    for (int t = 0; t < policy.max_length; ++t) {
        auto so = graph.step(prev, h, c);
        h = so.h;
        c = so.c;
        const Matrix& dist = tape.val(so.dist);
        const double u = rng.uniform();
        double cum = 0.0;
        int k = dist.rows - 1;
        for (int i = 0; i < dist.rows; ++i) {
            cum += dist.at(i, 0);
            if (u < cum) {
                k = i;
                break;
            }
        }
        const int action = allowed[k];
        poem.actions.push_back(action);
        poem.step_log_probs.push_back(std::log(dist.at(k, 0)));
        if (action == Vocabulary::kEos) break;
        prev = action;
    }
    return poem;
}

std::vector<int> SampledPoem::content_ids() const {
    std::vector<int> out = actions;
    if (!out.empty() && out.back() == Vocabulary::kEos) out.pop_back();
    return out;
}

// ---- rewards ----

RewardPair reward(const std::vector<int>& poem_ids, const std::vector<double>& clue,
                  const RewardModel& model, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw ParamError("reward: lambda outside [0, 1]");
    RewardPair r;
    r.relevance = model.relevance(poem_ids, clue);
    r.poeticness = model.poeticness(poem_ids);
    r.combined = lambda * r.relevance + (1.0 - lambda) * r.poeticness;
    return r;
}

Mlp Mlp::build(const std::string& prefix, int input_dim, int hidden, Rng& rng) {
    Mlp m;
    m.input_dim = input_dim;
    m.hidden = hidden;
    m.w1 = Param(prefix + ".w1", hidden, input_dim);
    m.b1 = Param(prefix + ".b1", hidden, 1);
    m.w2 = Param(prefix + ".w2", 1, hidden);
    m.b2 = Param(prefix + ".b2", 1, 1);
    m.w1.init_uniform(rng, -0.2, 0.2);
    m.b1.init_uniform(rng, -0.2, 0.2);
    m.w2.init_uniform(rng, -0.2, 0.2);
    m.b2.init_uniform(rng, -0.2, 0.2);
    return m;
}

double Mlp::score(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != input_dim) {
        throw ContractError("discriminator input dimension mismatch");
    }
    double z2 = b2.value.d[0];
    for (int i = 0; i < hidden; ++i) {
        double z1 = b1.value.at(i, 0);
        for (int j = 0; j < input_dim; ++j) z1 += w1.value.at(i, j) * x[j];
        z2 += w2.value.at(0, i) * std::tanh(z1);
    }
    return 1.0 / (1.0 + std::exp(-z2));
}

ParamRefs Mlp::params() {
    return {&w1, &b1, &w2, &b2};
}

Discriminators::Discriminators(int vocab_size, int clue_dim, int hidden, std::uint64_t seed)
    : vocab_size_(vocab_size), clue_dim_(clue_dim) {
    Rng rng(seed);
    relevance_ = Mlp::build("relevance", vocab_size + clue_dim, hidden, rng);
    poeticness_ = Mlp::build("poeticness", vocab_size, hidden, rng);
}

std::vector<double> Discriminators::bag_encoding(const std::vector<int>& poem_ids) const {
    std::vector<double> bag(vocab_size_, 0.0);
    if (poem_ids.empty()) return bag;
    for (int id : poem_ids) {
        if (id < 0 || id >= vocab_size_) throw ContractError("bag_encoding: id out of range");
        bag[id] += 1.0;
    }
    for (double& x : bag) x /= static_cast<double>(poem_ids.size());
    return bag;
}

double Discriminators::relevance(const std::vector<int>& poem_ids,
                                 const std::vector<double>& clue) const {
    if (static_cast<int>(clue.size()) != clue_dim_) {
        throw ContractError("relevance: clue dimension mismatch");
    }
    std::vector<double> x = bag_encoding(poem_ids);
    x.insert(x.end(), clue.begin(), clue.end());
    return relevance_.score(x);
}

double Discriminators::poeticness(const std::vector<int>& poem_ids) const {
    return poeticness_.score(bag_encoding(poem_ids));
}

std::vector<std::pair<std::string, Param*>> Discriminators::named_params() {
    return {
        {"relevance.w1", &relevance_.w1},   {"relevance.b1", &relevance_.b1},
        {"relevance.w2", &relevance_.w2},   {"relevance.b2", &relevance_.b2},
        {"poeticness.w1", &poeticness_.w1}, {"poeticness.b1", &poeticness_.b1},
        {"poeticness.w2", &poeticness_.w2}, {"poeticness.b2", &poeticness_.b2},
    };
}

namespace {

// Full-batch BCE epoch over (input, label) examples for one MLP.
void mlp_epoch(Mlp& mlp, const std::vector<std::pair<std::vector<double>, double>>& examples,
               double lr) {
    Tape tape;
    Var w1 = tape.leaf(mlp.w1);
    Var b1 = tape.leaf(mlp.b1);
    Var w2 = tape.leaf(mlp.w2);
    Var b2 = tape.leaf(mlp.b2);
    std::vector<Var> losses;
    for (const auto& [x, y] : examples) {
        Var input = tape.leaf(Matrix::column(x));
        Var hdn = tape.tanh(tape.add(tape.matmul(w1, input), b1));
        Var z = tape.add(tape.matmul(w2, hdn), b2);
        losses.push_back(tape.bce_with_logits(z, y));
    }
    Var loss = tape.scale(tape.add_all(losses), 1.0 / static_cast<double>(examples.size()));
    const ParamRefs params = mlp.params();
    zero_grads(params);
    tape.backward(loss);
    sgd_step(params, lr);
}

} // namespace

void Discriminators::update(const std::vector<std::vector<int>>& real_poems,
                            const std::vector<std::vector<double>>& real_clues,
                            const std::vector<std::vector<int>>& generated_poems,
                            int epochs, double lr) {
    if (real_poems.empty() || generated_poems.empty()) {
        throw ValidationError("train_discriminators: both classes must be non-empty");
    }
    if (real_clues.size() != real_poems.size()) {
        throw ContractError("train_discriminators: one clue per real poem required");
    }
    std::vector<std::pair<std::vector<double>, double>> poetic_examples;
    for (const auto& ids : real_poems) poetic_examples.emplace_back(bag_encoding(ids), 1.0);
    for (const auto& ids : generated_poems) poetic_examples.emplace_back(bag_encoding(ids), 0.0);

    std::vector<std::pair<std::vector<double>, double>> relevance_examples;
    const std::size_t n = real_poems.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> pos = bag_encoding(real_poems[i]);
        pos.insert(pos.end(), real_clues[i].begin(), real_clues[i].end());
        relevance_examples.emplace_back(std::move(pos), 1.0);
        const std::vector<double>& wrong = real_clues[(i + 1) % n];
        std::vector<double> neg = bag_encoding(real_poems[i]);
        neg.insert(neg.end(), wrong.begin(), wrong.end());
        relevance_examples.emplace_back(std::move(neg), 0.0);
    }
    for (int e = 0; e < epochs; ++e) {
        mlp_epoch(poeticness_, poetic_examples, lr);
        mlp_epoch(relevance_, relevance_examples, lr);
    }
}

Discriminators train_discriminators(const std::vector<std::vector<int>>& real_poems,
                                    const std::vector<std::vector<int>>& generated_poems,
                                    const std::vector<std::vector<double>>& real_clues,
                                    int vocab_size, int clue_dim,
                                    const DiscriminatorConfig& config) {
    Discriminators discs(vocab_size, clue_dim, config.hidden, config.seed);
    discs.update(real_poems, real_clues, generated_poems, config.epochs, config.lr);
    return discs;
}

// ---- policy gradient ----

void accumulate_policy_gradient(PoemPolicy& policy, const std::vector<PolicySample>& batch) {
    if (batch.empty()) throw ParamError("policy_gradient: empty batch");
    const std::size_t n = batch.size();
    double total = 0.0;
    for (const PolicySample& s : batch) total += s.reward;

    Tape tape;
    PolicyGraph graph(tape, policy);
    std::vector<Var> terms;
    for (const PolicySample& s : batch) {
        // Leave-one-out batch-mean baseline keeps the estimator unbiased.
        const double baseline =
            n > 1 ? (total - s.reward) / static_cast<double>(n - 1) : 0.0;
        const double advantage = s.reward - baseline;
        if (advantage == 0.0) continue;
        Var logp = graph.log_prob(s.features, s.actions);
        // ascent on expected reward = descent on the negated weighted log-prob
        terms.push_back(tape.scale(logp, -advantage / static_cast<double>(n)));
    }
    if (terms.empty()) return; // zero advantage everywhere: gradient is exactly zero
    tape.backward(tape.add_all(terms));
}

void policy_gradient_step(PoemPolicy& policy, const std::vector<PolicySample>& batch,
                          double learning_rate) {
    const ParamRefs params = policy.params();
    zero_grads(params);
    accumulate_policy_gradient(policy, batch);
    if (!grads_finite(params)) {
        throw DivergenceError("policy_gradient_step: non-finite gradient estimate");
    }
    sgd_step(params, learning_rate);
}

// ---- corpus and rendering ----

std::vector<std::vector<std::string>> load_poem_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::vector<std::string>> poems;
    std::vector<std::string> current;
    std::string line;
    auto flush = [&] {
        if (!current.empty()) {
            poems.push_back(current);
            current.clear();
        }
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto tokens = tokenize(line);
        if (tokens.empty()) {
            flush();
            continue;
        }
        current.insert(current.end(), tokens.begin(), tokens.end());
        current.push_back(kEolToken);
    }
    flush();
    return poems;
}

std::vector<std::vector<std::string>> split_poem_lines(const std::vector<int>& content_ids,
                                                       const Vocabulary& vocab) {
    const int eol_id = vocab.contains(kEolToken) ? vocab.id(kEolToken) : -1;
    std::vector<std::vector<std::string>> lines;
    std::vector<std::string> current;
    for (int id : content_ids) {
        if (id == eol_id) {
            if (!current.empty()) lines.push_back(current);
            current.clear();
            continue;
        }
        current.push_back(vocab.token(id));
    }
    if (!current.empty()) lines.push_back(current);
    return lines;
}

// ---- checkpointing ----

void save_poem_model(PoemModel& model, const std::filesystem::path& path,
                     const nlohmann::json& extra_meta) {
    nlohmann::json meta;
    meta["format"] = 1;
    meta["kind"] = "poem";
    meta["hidden"] = model.policy.hidden;
    meta["embedding_dim"] = model.policy.emb_dim;
    meta["feature_dim"] = model.policy.feature_dim;
    meta["max_poem_length"] = model.policy.max_length;
    meta["allow_eos"] = model.policy.allow_eos;
    meta["lambda"] = model.lambda;
    meta["object_dim"] = model.object_dim;
    meta["sentiment_dim"] = model.sentiment_dim;
    meta["scene_dim"] = model.scene_dim;
    meta["extractor_seed"] = model.extractor_seed;
    meta["disc_hidden"] = model.discs.named_params().front().second->value.rows;
    meta["vocab"] = model.policy.vocab.tokens();
    std::ostringstream hash_hex;
    hash_hex << std::hex << model.policy.vocab.hash();
    meta["vocab_hash"] = hash_hex.str();
    if (!extra_meta.is_null()) {
        for (auto it = extra_meta.begin(); it != extra_meta.end(); ++it) {
            meta[it.key()] = it.value();
        }
    }
    std::vector<checkpoint::NamedTensor> tensors;
    for (auto& [name, p] : model.policy.named_params()) tensors.emplace_back(name, &p->value);
    for (auto& [name, p] : model.discs.named_params()) tensors.emplace_back(name, &p->value);
    checkpoint::save(path, meta, tensors);
}

PoemModel load_poem_model(const std::filesystem::path& path) {
    auto ar = checkpoint::load(path);
    if (ar.meta.value("kind", "") != "poem") {
        throw FormatError(path.string() + ": not a poem-policy checkpoint");
    }
    Vocabulary vocab = Vocabulary::from_tokens(ar.meta.at("vocab").get<std::vector<std::string>>());
    PoemModel model;
    model.policy = build_policy(vocab, ar.meta.at("hidden").get<int>(),
                                ar.meta.at("embedding_dim").get<int>(),
                                ar.meta.at("feature_dim").get<int>(),
                                ar.meta.at("max_poem_length").get<int>(), 0);
    model.policy.allow_eos = ar.meta.value("allow_eos", true);
    model.lambda = ar.meta.at("lambda").get<double>();
    model.object_dim = ar.meta.at("object_dim").get<int>();
    model.sentiment_dim = ar.meta.at("sentiment_dim").get<int>();
    model.scene_dim = ar.meta.at("scene_dim").get<int>();
    model.extractor_seed = ar.meta.at("extractor_seed").get<std::uint64_t>();
    model.discs = Discriminators(vocab.size(), model.policy.hidden,
                                 ar.meta.at("disc_hidden").get<int>(), 0);
    for (auto& [name, p] : model.policy.named_params()) {
        p->value = ar.tensor(name);
    }
    for (auto& [name, p] : model.discs.named_params()) {
        p->value = ar.tensor(name);
    }
    return model;
}

// ---- outer loop ----

PoemTrainResult train_poem(const std::vector<std::vector<std::string>>& poems,
                           const std::vector<std::filesystem::path>& paintings,
                           const PoemTrainConfig& config, PoemModel* out) {
    if (poems.empty()) throw ValidationError("train_poem: poem corpus is empty");
    if (paintings.empty()) throw ValidationError("train_poem: no paintings given");

    Vocabulary vocab = Vocabulary::build_from_sequences(poems, config.min_count,
                                                        config.max_vocab);
    if (!vocab.contains(kEolToken)) {
        throw ValidationError("train_poem: corpus has no complete poem lines");
    }
    const int feature_dim = config.object_dim + config.sentiment_dim + config.scene_dim;
    PoemModel model;
    model.policy = build_policy(vocab, config.hidden, config.emb_dim, feature_dim,
                                config.max_length, config.seed);
    model.lambda = config.lambda;
    model.object_dim = config.object_dim;
    model.sentiment_dim = config.sentiment_dim;
    model.scene_dim = config.scene_dim;
    model.extractor_seed = config.seed;
    ExtractorSet extractors = model.extractors();

    std::vector<PaintingFeatures> features;
    for (const auto& image : paintings) {
        features.push_back(extract_features(image, extractors));
    }
    std::vector<std::vector<int>> real_ids;
    for (const auto& poem : poems) real_ids.push_back(vocab.encode(poem));

    model.discs = Discriminators(vocab.size(), config.hidden, config.disc_hidden,
                                 config.seed ^ 0xd15cull);

    Rng seed_rng(config.seed ^ 0x5eedull);
    PoemTrainResult result;
    for (int round = 0; round < config.rounds; ++round) {
        // Clues move with the policy, so refresh them every round.
        std::vector<std::vector<double>> real_clues;
        for (std::size_t i = 0; i < real_ids.size(); ++i) {
            real_clues.push_back(model.policy.encode_clue(features[i % features.size()]));
        }
        std::vector<PolicySample> batch;
        std::vector<std::vector<int>> generated;
        for (int b = 0; b < config.batch_size; ++b) {
            const std::size_t pi =
                (static_cast<std::size_t>(round) * config.batch_size + b) % features.size();
            PolicySample sample;
            sample.features = features[pi];
            model.policy.encode_clue(sample.features);
            SampledPoem poem = sample_poem(sample.features, model.policy, seed_rng.next_u64());
            if (poem.actions.empty()) continue;
            sample.actions = poem.actions;
            sample.step_log_probs = poem.step_log_probs;
            generated.push_back(poem.content_ids());
            batch.push_back(std::move(sample));
        }
        if (batch.empty()) continue;
        bool any_generated_content = false;
        for (const auto& g : generated) any_generated_content |= !g.empty();
        if (any_generated_content) {
            model.discs.update(real_ids, real_clues, generated, config.disc_epochs,
                               config.disc_lr);
        }
        double mean_reward = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const RewardPair r = reward(generated[i], batch[i].features.combined_clue,
                                        model.discs, model.lambda);
            batch[i].reward = r.combined;
            mean_reward += r.combined;
        }
        mean_reward /= static_cast<double>(batch.size());
        result.mean_rewards.push_back(mean_reward);
        policy_gradient_step(model.policy, batch, config.policy_lr);
    }
    if (out) *out = std::move(model);
    return result;
}

} // namespace proseforge
