#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "proseforge/corpus.hpp"
#include "proseforge/errors.hpp"
#include "proseforge/rng.hpp"

#include "test_util.hpp"

using namespace proseforge;

TEST_CASE("tokenize lowercases and splits punctuation") {
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("Thou art lost.") == std::vector<std::string>{"thou", "art", "lost", "."});
    CHECK(tokenize("O, speak!") == std::vector<std::string>{"o", ",", "speak", "!"});
    CHECK(tokenize("  doubled   spaces  ") == std::vector<std::string>{"doubled", "spaces"});
    CHECK(tokenize("'tis o'er") == std::vector<std::string>{"'tis", "o'er"});
    CHECK(tokenize("one--two") == std::vector<std::string>{"one", "-", "-", "two"});
}

TEST_CASE("tokenize emits no empty tokens on random byte soup") {
    Rng rng(5);
    const std::string alphabet = "abcXYZ .,!?'--\t09";
    for (int trial = 0; trial < 200; ++trial) {
        std::string s;
        const int len = rng.below(30);
        for (int i = 0; i < len; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
        for (const std::string& tok : tokenize(s)) {
            CHECK(!tok.empty());
            for (char c : tok) CHECK(!std::isupper(static_cast<unsigned char>(c)));
        }
    }
}

TEST_CASE("load_parallel basics") {
    testutil::TempDir dir("corpus");

    SUBCASE("two empty files give an empty list") {
        testutil::write_file(dir.file("a.txt"), "");
        testutil::write_file(dir.file("b.txt"), "");
        CHECK(load_parallel(dir.file("a.txt"), dir.file("b.txt")).empty());
    }

    SUBCASE("three-line fixture keeps file order") {
        testutil::write_file(dir.file("src.txt"), "First line here\nSecond one\nA third\n");
        testutil::write_file(dir.file("tgt.txt"), "line the first\nthe second\nthe third\n");
        const auto pairs = load_parallel(dir.file("src.txt"), dir.file("tgt.txt"));
        REQUIRE(pairs.size() == 3);
        CHECK(pairs[0].source == tokenize("First line here"));
        CHECK(pairs[2].target == tokenize("the third"));
    }

    SUBCASE("line count mismatch reports both counts") {
        testutil::write_file(dir.file("src.txt"), "one\ntwo\n");
        testutil::write_file(dir.file("tgt.txt"), "one\n");
        try {
            load_parallel(dir.file("src.txt"), dir.file("tgt.txt"));
            FAIL("expected AlignmentError");
        } catch (const AlignmentError& e) {
            const std::string msg = e.what();
            CHECK(msg.find('2') != std::string::npos);
            CHECK(msg.find('1') != std::string::npos);
        }
    }

    SUBCASE("blank on both sides is dropped, blank on one side is an error") {
        testutil::write_file(dir.file("src.txt"), "one\n\ntwo\n");
        testutil::write_file(dir.file("tgt.txt"), "uno\n\ndos\n");
        CHECK(load_parallel(dir.file("src.txt"), dir.file("tgt.txt")).size() == 2);

        testutil::write_file(dir.file("tgt2.txt"), "uno\nmiddle\ndos\n");
        testutil::write_file(dir.file("src2.txt"), "one\n\ntwo\n");
        CHECK_THROWS_AS(load_parallel(dir.file("src2.txt"), dir.file("tgt2.txt")),
                        AlignmentError);
    }

    SUBCASE("missing file is an io error") {
        CHECK_THROWS_AS(load_parallel(dir.file("nope.txt"), dir.file("nope2.txt")), IoError);
    }
}

TEST_CASE("build_vocab counts, thresholds and ties") {
    SUBCASE("empty pair list keeps only the reserved tokens") {
        const auto vocab = Vocabulary::build({}, 1, 100);
        CHECK(vocab.size() == 4);
        CHECK(vocab.token(Vocabulary::kPad) == "<pad>");
        CHECK(vocab.token(Vocabulary::kUnk) == "<unk>");
        CHECK(vocab.token(Vocabulary::kBos) == "<bos>");
        CHECK(vocab.token(Vocabulary::kEos) == "<eos>");
    }

    SUBCASE("counts pool over both sides") {
        std::vector<SentencePair> pairs{{tokenize("a b"), tokenize("a")}};
        const auto vocab = Vocabulary::build(pairs, 1, 100);
        CHECK(vocab.size() == 6);
        CHECK(vocab.id("a") == 4); // count 2 beats count 1
        CHECK(vocab.id("b") == 5);

        const auto strict = Vocabulary::build(pairs, 3, 100);
        CHECK(strict.size() == 4);
    }

    SUBCASE("frequency ties break lexicographically and max_size caps") {
        std::vector<SentencePair> pairs{{tokenize("zeta alpha"), tokenize("mid mid")}};
        const auto vocab = Vocabulary::build(pairs, 1, 100);
        CHECK(vocab.id("mid") == 4);
        CHECK(vocab.id("alpha") == 5);
        CHECK(vocab.id("zeta") == 6);

        const auto capped = Vocabulary::build(pairs, 1, 6);
        CHECK(capped.size() == 6);
        CHECK(capped.contains("mid"));
        CHECK(capped.contains("alpha"));
        CHECK(!capped.contains("zeta"));
    }

    SUBCASE("bad thresholds are rejected") {
        CHECK_THROWS_AS(Vocabulary::build({}, 0, 100), ParamError);
        CHECK_THROWS_AS(Vocabulary::build({}, 1, 4), ParamError);
    }
}

TEST_CASE("encode and decode") {
    std::vector<SentencePair> pairs{{tokenize("a b c"), tokenize("a b c")}};
    const auto vocab = Vocabulary::build(pairs, 1, 100);

    CHECK(vocab.encode({}) == std::vector<int>{});
    CHECK(vocab.encode({}, true, true) ==
          std::vector<int>{Vocabulary::kBos, Vocabulary::kEos});
    CHECK(vocab.encode({"mystery"}) == std::vector<int>{Vocabulary::kUnk});

    // round trip over in-vocab tokens
    Rng rng(9);
    const std::vector<std::string> pool{"a", "b", "c"};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> tokens;
        for (int i = 0, n = rng.below(12); i < n; ++i) tokens.push_back(pool[rng.below(3)]);
        CHECK(vocab.decode(vocab.encode(tokens)) == tokens);
    }
}

TEST_CASE("vocabulary save/load round trip") {
    testutil::TempDir dir("vocab");
    std::vector<SentencePair> pairs{{tokenize("w x y"), tokenize("z w")}};
    const auto vocab = Vocabulary::build(pairs, 1, 100);
    vocab.save(dir.file("vocab.txt"));
    const auto loaded = Vocabulary::load(dir.file("vocab.txt"));
    CHECK(loaded.tokens() == vocab.tokens());
    CHECK(loaded.hash() == vocab.hash());
}

TEST_CASE("lexicon loads lowercase deduplicated pairs") {
    testutil::TempDir dir("lex");
    testutil::write_file(dir.file("lex.tsv"),
                         "Thou\tyou\nthou\tYOU\nhath\thas\n\nart\tare\n");
    const auto lex = Lexicon::load(dir.file("lex.tsv"));
    CHECK(lex.size() == 3);
    for (const auto& [a, b] : lex.pairs()) {
        for (char c : a) CHECK(!std::isupper(static_cast<unsigned char>(c)));
        for (char c : b) CHECK(!std::isupper(static_cast<unsigned char>(c)));
    }

    testutil::write_file(dir.file("bad.tsv"), "no tab here\n");
    CHECK_THROWS_AS(Lexicon::load(dir.file("bad.tsv")), FormatError);
}
