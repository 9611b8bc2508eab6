#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace proseforge {

using TokenSeq = std::vector<std::string>;

// Clipped n-gram match and total counts for n = 1..4 plus lengths.
struct BleuStats {
    std::array<long long, 4> matches{};
    std::array<long long, 4> totals{};
    long long hyp_len = 0;
    long long ref_len = 0;

    BleuStats& operator+=(const BleuStats& o);
};

BleuStats sentence_stats(const TokenSeq& hypothesis, const TokenSeq& reference);

// BLEU-4 on a 0..100 scale with brevity penalty. Precisions for n >= 2 are
// add-one smoothed; a zero unigram match or empty hypothesis scores 0.
double bleu_from_stats(const BleuStats& stats);
double sentence_bleu(const TokenSeq& hypothesis, const TokenSeq& reference);

struct BleuReport {
    std::vector<double> sentence_scores;
    double average_target_bleu = 0.0; // arithmetic mean of sentence scores
    double corpus_bleu = 0.0;         // pooled-counts reading, for reference
};

BleuReport corpus_report(const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs);

struct SentenceEval {
    double bleu = 0.0;
    int source_length = 0;
};

struct LengthBin {
    int lo = 0;
    int hi = 0;
    long long count = 0;
    double mean_bleu = 0.0;
};

struct LengthBinnedReport {
    int bin_width = 0;
    std::vector<LengthBin> bins; // [1..w], [w+1..2w], ... up to the max length
};

LengthBinnedReport bleu_by_length(const std::vector<SentenceEval>& sentences, int bin_width);

// Header: bin_low,bin_high,count,mean_bleu
void write_length_report_csv(const std::filesystem::path& path,
                             const LengthBinnedReport& report);

struct LikertRecord {
    std::string painting_id;
    std::string rater_id;
    int content = 0;
    int creativity = 0;
    int style = 0;
};

// CSV with header painting_id,rater_id,content,creativity,style; every score
// must lie in 1..5.
std::vector<LikertRecord> load_likert_csv(const std::filesystem::path& path);

struct LikertSummary {
    double content = 0.0;
    double creativity = 0.0;
    double style = 0.0;
};

// Full-precision means per dimension (integer sums divided once).
LikertSummary likert_summary(const std::vector<LikertRecord>& records);

// Reporting precision: one decimal, half away from zero.
double round1(double x);

// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

} // namespace proseforge
