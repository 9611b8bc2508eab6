#include "proseforge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "proseforge/errors.hpp"

namespace proseforge {

BleuStats& BleuStats::operator+=(const BleuStats& o) {
    for (int n = 0; n < 4; ++n) {
        matches[n] += o.matches[n];
        totals[n] += o.totals[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
}

namespace {

// n-grams as joined strings; '\x1f' cannot appear inside a token.
std::map<std::string, long long> ngram_counts(const TokenSeq& tokens, int n) {
    std::map<std::string, long long> counts;
    const int limit = static_cast<int>(tokens.size()) - n + 1;
    for (int i = 0; i < limit; ++i) {
        std::string key = tokens[i];
        for (int k = 1; k < n; ++k) {
            key += '\x1f';
            key += tokens[i + k];
        }
        ++counts[key];
    }
    return counts;
}

} // namespace

BleuStats sentence_stats(const TokenSeq& hypothesis, const TokenSeq& reference) {
    if (reference.empty()) throw ValidationError("bleu: reference must be non-empty");
    BleuStats stats;
    stats.hyp_len = static_cast<long long>(hypothesis.size());
    stats.ref_len = static_cast<long long>(reference.size());
    for (int n = 1; n <= 4; ++n) {
        const auto hyp = ngram_counts(hypothesis, n);
        const auto ref = ngram_counts(reference, n);
        long long total = 0;
        long long matched = 0;
        for (const auto& [gram, count] : hyp) {
            total += count;
            auto it = ref.find(gram);
            if (it != ref.end()) matched += std::min(count, it->second);
        }
        stats.totals[n - 1] = total;
        stats.matches[n - 1] = matched;
    }
    return stats;
}

double bleu_from_stats(const BleuStats& stats) {
    if (stats.hyp_len == 0) return 0.0;
    if (stats.matches[0] == 0) return 0.0;
    double log_precision = std::log(static_cast<double>(stats.matches[0]) /
                                    static_cast<double>(stats.totals[0]));
    for (int n = 2; n <= 4; ++n) {
        log_precision += std::log(static_cast<double>(stats.matches[n - 1] + 1) /
                                  static_cast<double>(stats.totals[n - 1] + 1));
    }
    double brevity = 1.0;
    if (stats.hyp_len < stats.ref_len) {
        brevity = std::exp(1.0 - static_cast<double>(stats.ref_len) /
                                     static_cast<double>(stats.hyp_len));
    }
    return 100.0 * brevity * std::exp(log_precision / 4.0);
}

double sentence_bleu(const TokenSeq& hypothesis, const TokenSeq& reference) {
    return bleu_from_stats(sentence_stats(hypothesis, reference));
}

BleuReport corpus_report(const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs) {
    if (pairs.empty()) throw ValidationError("corpus_report: no sentence pairs");
    BleuReport report;
    BleuStats pooled;
    double sum = 0.0;
    for (const auto& [hyp, ref] : pairs) {
        const BleuStats stats = sentence_stats(hyp, ref);
        pooled += stats;
        const double score = bleu_from_stats(stats);
        report.sentence_scores.push_back(score);
        sum += score;
    }
    report.average_target_bleu = sum / static_cast<double>(pairs.size());
    report.corpus_bleu = bleu_from_stats(pooled);
    return report;
}

LengthBinnedReport bleu_by_length(const std::vector<SentenceEval>& sentences, int bin_width) {
    if (bin_width < 1) throw ParamError("bleu_by_length: bin_width must be >= 1");
    LengthBinnedReport report;
    report.bin_width = bin_width;
    int max_len = 0;
    for (const SentenceEval& s : sentences) {
        if (s.source_length < 1) throw ValidationError("bleu_by_length: source length < 1");
        max_len = std::max(max_len, s.source_length);
    }
    if (max_len == 0) return report;
    const int nbins = (max_len + bin_width - 1) / bin_width;
    report.bins.resize(nbins);
    std::vector<double> sums(nbins, 0.0);
    for (int b = 0; b < nbins; ++b) {
        report.bins[b].lo = b * bin_width + 1;
        report.bins[b].hi = (b + 1) * bin_width;
    }
    for (const SentenceEval& s : sentences) {
        const int b = (s.source_length - 1) / bin_width;
        ++report.bins[b].count;
        sums[b] += s.bleu;
    }
    for (int b = 0; b < nbins; ++b) {
        if (report.bins[b].count > 0) {
            report.bins[b].mean_bleu = sums[b] / static_cast<double>(report.bins[b].count);
        }
    }
    return report;
}

void write_length_report_csv(const std::filesystem::path& path,
                             const LengthBinnedReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "bin_low,bin_high,count,mean_bleu\n";
    out.precision(6);
    out << std::fixed;
    for (const LengthBin& bin : report.bins) {
        out << bin.lo << ',' << bin.hi << ',' << bin.count << ',' << bin.mean_bleu << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

int parse_score(const std::string& text, std::size_t lineno) {
    std::size_t pos = 0;
    int value = 0;
    try {
        value = std::stoi(text, &pos);
    } catch (const std::exception&) {
        throw ValidationError("likert line " + std::to_string(lineno) +
                              ": score is not an integer");
    }
    if (pos != text.size()) {
        throw ValidationError("likert line " + std::to_string(lineno) +
                              ": score is not an integer");
    }
    if (value < 1 || value > 5) {
        throw ValidationError("likert line " + std::to_string(lineno) +
                              ": score " + text + " outside 1..5");
    }
    return value;
}

} // namespace

std::vector<LikertRecord> load_likert_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "painting_id,rater_id,content,creativity,style") {
        throw FormatError(path.string() + ": unexpected header");
    }
    std::vector<LikertRecord> records;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) +
                              ": expected 5 fields");
        }
        LikertRecord r;
        r.painting_id = fields[0];
        r.rater_id = fields[1];
        r.content = parse_score(fields[2], lineno);
        r.creativity = parse_score(fields[3], lineno);
        r.style = parse_score(fields[4], lineno);
        records.push_back(std::move(r));
    }
    return records;
}

LikertSummary likert_summary(const std::vector<LikertRecord>& records) {
    if (records.empty()) throw ValidationError("likert_summary: no records");
    long long content = 0;
    long long creativity = 0;
    long long style = 0;
    for (const LikertRecord& r : records) {
        content += r.content;
        creativity += r.creativity;
        style += r.style;
    }
    const double n = static_cast<double>(records.size());
    return LikertSummary{static_cast<double>(content) / n,
                         static_cast<double>(creativity) / n,
                         static_cast<double>(style) / n};
}

double round1(double x) {
    return static_cast<double>(std::llround(x * 10.0)) / 10.0;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return xs[a] < xs[b];
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw ParamError("spearman: need two equal-length samples of size >= 2");
    }
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double cov = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx) * (rx[i] - mx);
        vy += (ry[i] - my) * (ry[i] - my);
    }
    if (vx == 0.0 || vy == 0.0) return 0.0;
    return cov / std::sqrt(vx * vy);
}

} // namespace proseforge
