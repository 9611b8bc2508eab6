#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "proseforge/corpus.hpp"
#include "proseforge/matrix.hpp"

namespace proseforge {

// One dense vector per vocabulary id, shared between source and target.
struct EmbeddingMatrix {
    Matrix values; // vocab size x dim
    int dim = 0;
};

// Reads a word-vector text file (token followed by dim floats per line).
// Vocabulary tokens found in the file keep their file values; missing tokens
// and the reserved four are drawn from a seeded uniform on [-0.1, 0.1],
// except PAD which stays all zeros.
EmbeddingMatrix load_pretrained(const std::filesystem::path& path,
                                const Vocabulary& vocab, int dim,
                                std::uint64_t seed = 1);

// Fully seeded-random matrix (PAD zero); the offline fallback when no
// pretrained file is configured.
EmbeddingMatrix random_embeddings(const Vocabulary& vocab, int dim,
                                  std::uint64_t seed = 1);

// Symmetrized lexicon restricted to in-vocabulary words; adjacency[i] lists
// the neighbors of vocabulary id i in ascending order.
std::vector<std::vector<int>> lexicon_graph(const Vocabulary& vocab, const Lexicon& lexicon);

// Graph-based retrofitting. Each sweep updates rows in vocabulary id order:
//   q_i <- (alpha * x_i + beta * sum_{j in N(i)} q_j) / (alpha + beta * |N(i)|)
// Words without lexicon neighbors are left bit-identical.
EmbeddingMatrix retrofit(const EmbeddingMatrix& emb, const Vocabulary& vocab,
                         const Lexicon& lexicon, double alpha, double beta, int iters);

// Same, recording the objective value before any update and after each sweep.
EmbeddingMatrix retrofit_with_trace(const EmbeddingMatrix& emb, const Vocabulary& vocab,
                                    const Lexicon& lexicon, double alpha, double beta,
                                    int iters, std::vector<double>* objective_trace);

// J(Q) = sum_i alpha * ||q_i - x_i||^2 + sum_{edges} beta * ||q_i - q_j||^2,
// each undirected edge counted once.
double retrofit_objective(const EmbeddingMatrix& current, const EmbeddingMatrix& original,
                          const std::vector<std::vector<int>>& graph,
                          double alpha, double beta);

// Serializes rows for non-reserved tokens in the word-vector text format.
void save_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                  const EmbeddingMatrix& emb);

} // namespace proseforge
