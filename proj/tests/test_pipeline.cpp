#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "proseforge/cli.hpp"
#include "proseforge/pipeline.hpp"
#include "proseforge/training.hpp"

#include "test_util.hpp"

using namespace proseforge;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), {});
}

int count_lines(const std::filesystem::path& path) {
    std::ifstream f(path);
    std::string line;
    int n = 0;
    while (std::getline(f, line)) ++n;
    return n;
}

} // namespace

TEST_CASE("paint_to_prose composes the stub poem with the overfit translator") {
    testutil::TempDir dir("compose");
    testutil::write_file(dir.file("painting.png"), "fixture painting bytes");
    const auto corpus = testutil::toy_corpus(10);
    const auto model =
        testutil::overfit_model(corpus, dir, AttentionKind::Global, false, 200);

    const FixedPoemStage poem({join_tokens(corpus.train[0].source),
                               join_tokens(corpus.train[1].source)});
    const auto result = paint_to_prose(dir.file("painting.png"), poem, model, 5, 20);

    CHECK(result.painting_id == "painting");
    REQUIRE(result.poem_lines.size() == 2);
    REQUIRE(result.line_translations.size() == 2);
    CHECK(result.prose == join_tokens(corpus.train[0].target) + "\n" +
                              join_tokens(corpus.train[1].target));

    // single-line poem gives single-line prose
    const FixedPoemStage one_line({join_tokens(corpus.train[2].source)});
    const auto single = paint_to_prose(dir.file("painting.png"), one_line, model, 5, 20);
    CHECK(single.poem_lines.size() == 1);
    CHECK(single.prose == join_tokens(corpus.train[2].target));

    // record field order is stable and self-describing
    const std::string record = result.to_record();
    CHECK(record.find("painting_id: painting\n") == 0);
    CHECK(record.find("poem_lines: 2\n") != std::string::npos);
    CHECK(record.find("prose:\n") != std::string::npos);
}

TEST_CASE("pipeline is deterministic under fixed seeds and frozen models") {
    testutil::TempDir dir("determ");
    testutil::write_file(dir.file("painting.png"), "the same painting bytes");
    const auto corpus = testutil::toy_corpus(10);
    const auto transfer =
        testutil::overfit_model(corpus, dir, AttentionKind::Global, false, 40);

    // a real policy stage end to end
    const std::vector<std::vector<std::string>> poems{
        {"the", "king", "sings", kEolToken, "the", "queen", "weeps", kEolToken},
        {"the", "fool", "dreams", kEolToken},
    };
    PoemTrainConfig pc;
    pc.rounds = 2;
    pc.batch_size = 2;
    pc.hidden = 8;
    pc.emb_dim = 6;
    pc.max_length = 8;
    pc.object_dim = 3;
    pc.sentiment_dim = 3;
    pc.scene_dim = 3;
    pc.disc_hidden = 4;
    pc.seed = 5;
    PoemModel poem_model;
    train_poem(poems, {dir.file("painting.png")}, pc, &poem_model);

    const PolicyPoemStage stage(poem_model);
    const auto first = paint_to_prose(dir.file("painting.png"), stage, transfer, 99, 20);
    const auto second = paint_to_prose(dir.file("painting.png"), stage, transfer, 99, 20);
    CHECK(first.to_record() == second.to_record());
    CHECK(first.prose == second.prose);
    CHECK(first.poem_lines == second.poem_lines);

    const auto other_seed = paint_to_prose(dir.file("painting.png"), stage, transfer, 100, 20);
    CHECK(other_seed.to_record().size() > 0); // different seed still works
}

TEST_CASE("no cross-stage state: stubbing the poem stage never changes translations") {
    testutil::TempDir dir("stages");
    testutil::write_file(dir.file("painting.png"), "bytes");
    const auto corpus = testutil::toy_corpus(10);
    const auto model =
        testutil::overfit_model(corpus, dir, AttentionKind::Global, false, 40);

    const std::string line = join_tokens(corpus.train[3].source);
    const FixedPoemStage a({line});
    const FixedPoemStage b({line, line, line});
    const auto ra = paint_to_prose(dir.file("painting.png"), a, model, 1, 20);
    const auto rb = paint_to_prose(dir.file("painting.png"), b, model, 2, 20);
    CHECK(ra.line_translations[0].output_tokens == rb.line_translations[0].output_tokens);
    CHECK(rb.line_translations[1].output_tokens == rb.line_translations[2].output_tokens);
    CHECK(ra.line_translations[0].output_tokens == rb.line_translations[2].output_tokens);
}

TEST_CASE("pipeline failures carry the stage name") {
    testutil::TempDir dir("stagefail");
    testutil::write_file(dir.file("painting.png"), "bytes");
    const auto corpus = testutil::toy_corpus(10);
    const auto model =
        testutil::overfit_model(corpus, dir, AttentionKind::Global, false, 1);

    const FixedPoemStage blank_line({"the king sings now .", "   "});
    try {
        paint_to_prose(dir.file("painting.png"), blank_line, model, 5, 20);
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(e.stage == "transfer");
        CHECK(e.partial_poem.size() == 2);
    }
}

TEST_CASE("cli usage errors exit with code 2") {
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"no-such-subcommand"}) == 2);
    CHECK(run_cli({"translate", "--bogus-flag"}) == 2);
    CHECK(run_cli({"translate"}) == 2); // missing required flags
}

TEST_CASE("cli translate and evaluate round trip on fixtures") {
    testutil::TempDir dir("cli");
    const auto corpus = testutil::toy_corpus(10);
    TrainingConfig tc;
    const auto model_path = dir.file("model.ckpt");
    {
        auto model = testutil::overfit_model(corpus, dir, AttentionKind::Global, false, 200);
        save_model(model, model_path);
    }

    std::string src_text;
    std::string ref_text;
    for (int i = 0; i < 6; ++i) {
        src_text += join_tokens(corpus.train[i].source) + "\n";
        ref_text += join_tokens(corpus.train[i].target) + "\n";
    }
    testutil::write_file(dir.file("input.txt"), src_text);
    testutil::write_file(dir.file("refs.txt"), ref_text);

    CHECK(run_cli({"translate", "--model", model_path.string(), "--input",
                   dir.file("input.txt").string(), "--output",
                   dir.file("hyp.txt").string(), "--max-len", "20"}) == 0);
    CHECK(count_lines(dir.file("hyp.txt")) == 6);

    // overfit model reproduces the references, so BLEU is 100
    CHECK(run_cli({"evaluate", "--input", dir.file("hyp.txt").string(), "--reference",
                   dir.file("refs.txt").string(), "--output",
                   dir.file("report.txt").string()}) == 0);
    const std::string report = read_file(dir.file("report.txt"));
    CHECK(report.find("average_sentence_bleu 100") != std::string::npos);

    // identical files always evaluate to 100
    CHECK(run_cli({"evaluate", "--input", dir.file("refs.txt").string(), "--reference",
                   dir.file("refs.txt").string(), "--output",
                   dir.file("report2.txt").string()}) == 0);
    CHECK(read_file(dir.file("report2.txt")).find("average_sentence_bleu 100") !=
          std::string::npos);

    CHECK(run_cli({"bleu-by-length", "--input", dir.file("hyp.txt").string(),
                   "--reference", dir.file("refs.txt").string(), "--source",
                   dir.file("input.txt").string(), "--bin-width", "3", "--output",
                   dir.file("bins.csv").string()}) == 0);
    const std::string csv = read_file(dir.file("bins.csv"));
    CHECK(csv.rfind("bin_low,bin_high,count,mean_bleu\n", 0) == 0);
}

TEST_CASE("cli likert and retrofit subcommands") {
    testutil::TempDir dir("cli2");
    CHECK(run_cli({"likert", "--input",
                   (std::filesystem::path(PROSEFORGE_DATA_DIR) / "survey_ratings.csv").string(),
                   "--output", dir.file("likert.txt").string()}) == 0);
    const std::string summary = read_file(dir.file("likert.txt"));
    CHECK(summary.find("content 3.7") != std::string::npos);
    CHECK(summary.find("creativity 3.9") != std::string::npos);
    CHECK(summary.find("style 3.9") != std::string::npos);

    testutil::write_file(dir.file("vec.txt"), "thou 1 0\nyou 0 1\nhath 0.5 0.5\n");
    testutil::write_file(dir.file("lex.tsv"), "thou\tyou\n");
    CHECK(run_cli({"retrofit", "--input", dir.file("vec.txt").string(), "--lexicon",
                   dir.file("lex.tsv").string(), "--output", dir.file("fitted.txt").string(),
                   "--iters", "10"}) == 0);
    const std::string fitted = read_file(dir.file("fitted.txt"));
    CHECK(fitted.find("thou") != std::string::npos);
    CHECK(count_lines(dir.file("fitted.txt")) == 3);

    // likert ingestion failure surfaces as exit 1
    testutil::write_file(dir.file("bad.csv"),
                         "painting_id,rater_id,content,creativity,style\np,r,9,1,1\n");
    CHECK(run_cli({"likert", "--input", dir.file("bad.csv").string()}) == 1);
}

TEST_CASE("cli config file with flag overrides and cache dir env") {
    testutil::TempDir dir("cli3");
    const auto corpus = testutil::toy_corpus(10);
    std::string train_src;
    std::string train_tgt;
    for (const auto& p : corpus.train) {
        train_src += join_tokens(p.source) + "\n";
        train_tgt += join_tokens(p.target) + "\n";
    }
    testutil::write_file(dir.file("train.modern"), train_src);
    testutil::write_file(dir.file("train.original"), train_tgt);
    testutil::write_file(dir.file("cfg.txt"),
                         "train_source = " + dir.file("train.modern").string() + "\n" +
                             "train_target = " + dir.file("train.original").string() + "\n" +
                             "# comment line\n"
                             "epochs = 1\n"
                             "batch_size = 4\n"
                             "hidden_size = 8\n"
                             "embedding_dim = 6\n"
                             "min_count = 1\n");

    // PROSE_FORGE_CACHE decides where the checkpoint lands when --output is
    // not given
    const auto cache = dir.file("cachehome");
    setenv("PROSE_FORGE_CACHE", cache.string().c_str(), 1);
    CHECK(run_cli({"train-transfer", "--config", dir.file("cfg.txt").string(),
                   "--attention", "bahdanau", "--seed", "9"}) == 0);
    unsetenv("PROSE_FORGE_CACHE");
    CHECK(std::filesystem::exists(cache / "transfer_bahdanau.ckpt"));
    CHECK(std::filesystem::exists(cache / "transfer_bahdanau.ckpt.metrics.tsv"));

    const auto model = load_model(cache / "transfer_bahdanau.ckpt");
    CHECK(model.spec.attention == AttentionKind::Bahdanau);
    CHECK(model.spec.seed == 9); // flag override beat the config default
}

TEST_CASE("cli poem and prose produce files end to end") {
    testutil::TempDir dir("cli4");
    testutil::write_file(dir.file("painting.png"), "painting for the cli");
    testutil::write_file(dir.file("poems.txt"),
                         "the king sings now\nthe queen weeps now\n\nthe fool dreams now\n");
    std::filesystem::create_directories(dir.file("gallery"));
    testutil::write_file(dir.file("gallery") / "a.png", "gallery painting a");
    testutil::write_file(dir.file("cfg.txt"),
                         "paintings_dir = " + (dir.file("gallery")).string() + "\n" +
                             "poem_rounds = 2\n"
                             "poem_batch_size = 2\n"
                             "poem_hidden = 8\n"
                             "poem_embedding_dim = 6\n"
                             "poem_max_length = 8\n"
                             "object_dim = 3\n"
                             "sentiment_dim = 3\n"
                             "scene_dim = 3\n"
                             "disc_hidden = 4\n");
    CHECK(run_cli({"train-poem", "--config", dir.file("cfg.txt").string(), "--input",
                   dir.file("poems.txt").string(), "--output",
                   dir.file("poem.ckpt").string(), "--seed", "3"}) == 0);
    REQUIRE(std::filesystem::exists(dir.file("poem.ckpt")));

    CHECK(run_cli({"poem", "--poem-model", dir.file("poem.ckpt").string(), "--input",
                   dir.file("painting.png").string(), "--seed", "4", "--output",
                   dir.file("poem.txt").string()}) == 0);
    CHECK(std::filesystem::exists(dir.file("poem.txt")));

    const auto corpus = testutil::toy_corpus(10);
    const auto model_path = dir.file("transfer.ckpt");
    {
        auto model = testutil::overfit_model(corpus, dir, AttentionKind::Global, false, 40);
        save_model(model, model_path);
    }
    CHECK(run_cli({"prose", "--poem-model", dir.file("poem.ckpt").string(), "--model",
                   model_path.string(), "--input", dir.file("painting.png").string(),
                   "--seed", "4", "--output", dir.file("out.prose").string()}) == 0);
    CHECK(std::filesystem::exists(dir.file("out.prose")));
    REQUIRE(std::filesystem::exists(dir.file("out.prose.record")));
    const std::string record = read_file(dir.file("out.prose.record"));
    CHECK(record.find("painting_id: painting\n") == 0);

    // identical invocation gives an identical record
    CHECK(run_cli({"prose", "--poem-model", dir.file("poem.ckpt").string(), "--model",
                   model_path.string(), "--input", dir.file("painting.png").string(),
                   "--seed", "4", "--output", dir.file("out2.prose").string()}) == 0);
    CHECK(read_file(dir.file("out2.prose.record")) == record);
}
