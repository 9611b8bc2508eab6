#include "proseforge/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "proseforge/errors.hpp"
#include "proseforge/rng.hpp"

namespace proseforge {

namespace {

void seed_missing_rows(EmbeddingMatrix& emb, const std::vector<bool>& found,
                       std::uint64_t seed) {
    Rng rng(seed);
    for (int i = 0; i < emb.values.rows; ++i) {
        if (found[i]) continue;
        if (i == Vocabulary::kPad) continue; // PAD row stays zero
        for (int j = 0; j < emb.dim; ++j) emb.values.at(i, j) = rng.uniform(-0.1, 0.1);
    }
}

} // namespace

EmbeddingMatrix load_pretrained(const std::filesystem::path& path,
                                const Vocabulary& vocab, int dim,
                                std::uint64_t seed) {
    if (dim <= 0) throw ParamError("load_pretrained: dim must be positive");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    EmbeddingMatrix emb;
    emb.dim = dim;
    emb.values = Matrix(vocab.size(), dim);
    std::vector<bool> found(vocab.size(), false);
    // Reserved rows never come from the file.
    std::vector<double> row(dim);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        int n = 0;
        double x;
        while (n < dim && (ls >> x)) {
            if (!std::isfinite(x)) {
                throw FormatError(path.string() + ":" + std::to_string(lineno) +
                                  ": non-finite value");
            }
            row[n++] = x;
        }
        double extra;
        if (n != dim || (ls >> extra)) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) +
                              ": expected " + std::to_string(dim) + " values per token");
        }
        if (!vocab.contains(token)) continue;
        const int id = vocab.id(token);
        if (id < 4) continue;
        for (int j = 0; j < dim; ++j) emb.values.at(id, j) = row[j];
        found[id] = true;
    }
    seed_missing_rows(emb, found, seed);
    return emb;
}

EmbeddingMatrix random_embeddings(const Vocabulary& vocab, int dim, std::uint64_t seed) {
    if (dim <= 0) throw ParamError("random_embeddings: dim must be positive");
    EmbeddingMatrix emb;
    emb.dim = dim;
    emb.values = Matrix(vocab.size(), dim);
    seed_missing_rows(emb, std::vector<bool>(vocab.size(), false), seed);
    return emb;
}

std::vector<std::vector<int>> lexicon_graph(const Vocabulary& vocab, const Lexicon& lexicon) {
    std::vector<std::set<int>> adj(vocab.size());
    for (const auto& [shak, modern] : lexicon.pairs()) {
        if (!vocab.contains(shak) || !vocab.contains(modern)) continue;
        const int a = vocab.id(shak);
        const int b = vocab.id(modern);
        if (a == b) continue;
        adj[a].insert(b);
        adj[b].insert(a);
    }
    std::vector<std::vector<int>> graph(vocab.size());
    for (std::size_t i = 0; i < adj.size(); ++i) {
        graph[i].assign(adj[i].begin(), adj[i].end());
    }
    return graph;
}

double retrofit_objective(const EmbeddingMatrix& current, const EmbeddingMatrix& original,
                          const std::vector<std::vector<int>>& graph,
                          double alpha, double beta) {
    double j = 0.0;
    const int dim = current.dim;
    for (int i = 0; i < current.values.rows; ++i) {
        double fit = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double diff = current.values.at(i, k) - original.values.at(i, k);
            fit += diff * diff;
        }
        j += alpha * fit;
        for (int nb : graph[i]) {
            if (nb < i) continue; // each undirected edge once
            double pull = 0.0;
            for (int k = 0; k < dim; ++k) {
                const double diff = current.values.at(i, k) - current.values.at(nb, k);
                pull += diff * diff;
            }
            j += beta * pull;
        }
    }
    return j;
}

EmbeddingMatrix retrofit_with_trace(const EmbeddingMatrix& emb, const Vocabulary& vocab,
                                    const Lexicon& lexicon, double alpha, double beta,
                                    int iters, std::vector<double>* objective_trace) {
    if (alpha <= 0.0 || beta <= 0.0) {
        throw ParamError("retrofit: alpha and beta must be positive");
    }
    if (iters < 0) throw ParamError("retrofit: iters must be >= 0");
    if (emb.values.rows != vocab.size()) {
        throw ContractError("retrofit: embedding rows do not match vocabulary size");
    }
    const auto graph = lexicon_graph(vocab, lexicon);
    const EmbeddingMatrix original = emb;
    EmbeddingMatrix q = emb;
    if (objective_trace) {
        objective_trace->clear();
        objective_trace->push_back(retrofit_objective(q, original, graph, alpha, beta));
    }
    const int dim = emb.dim;
    std::vector<double> numer(dim);
    for (int sweep = 0; sweep < iters; ++sweep) {
        for (int i = 0; i < q.values.rows; ++i) {
            const auto& neighbors = graph[i];
            if (neighbors.empty()) continue;
            for (int k = 0; k < dim; ++k) numer[k] = alpha * original.values.at(i, k);
            for (int nb : neighbors) {
                for (int k = 0; k < dim; ++k) numer[k] += beta * q.values.at(nb, k);
            }
            const double denom = alpha + beta * static_cast<double>(neighbors.size());
            for (int k = 0; k < dim; ++k) q.values.at(i, k) = numer[k] / denom;
        }
        if (objective_trace) {
            objective_trace->push_back(retrofit_objective(q, original, graph, alpha, beta));
        }
    }
    return q;
}

EmbeddingMatrix retrofit(const EmbeddingMatrix& emb, const Vocabulary& vocab,
                         const Lexicon& lexicon, double alpha, double beta, int iters) {
    return retrofit_with_trace(emb, vocab, lexicon, alpha, beta, iters, nullptr);
}

void save_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                  const EmbeddingMatrix& emb) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(17);
    for (int i = 4; i < vocab.size(); ++i) {
        out << vocab.token(i);
        for (int j = 0; j < emb.dim; ++j) out << ' ' << emb.values.at(i, j);
        out << '\n';
    }
}

} // namespace proseforge
