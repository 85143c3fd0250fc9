#include <doctest.h>

#include <filesystem>

#include "vqcpc/errors.hpp"
#include "vqcpc/tokens.hpp"

using namespace vqcpc;

namespace {

RawTokenSequence raw(std::vector<uint64_t> codewords, int label = 0,
                     std::string participant = "p") {
    RawTokenSequence s;
    s.codewords = std::move(codewords);
    s.label = label;
    s.participant_id = std::move(participant);
    return s;
}

}  // namespace

TEST_SUITE("tokens") {

TEST_CASE("vocab: 3 distinct codewords -> size 7, first-occurrence order") {
    auto v = build_vocab({raw({42, 7, 42, 99})});
    CHECK(v.size() == 7);
    CHECK(v.encode(42) == 4);
    CHECK(v.encode(7) == 5);
    CHECK(v.encode(99) == 6);
    CHECK(v.encode(1000) == Vocabulary::kUnk);
    CHECK_THROWS_AS(build_vocab({}), EmptyCorpus);
}

TEST_CASE("vocab determinism and decode identity") {
    std::vector<RawTokenSequence> corpus = {raw({5, 9}), raw({9, 2, 5})};
    auto a = build_vocab(corpus);
    auto b = build_vocab(corpus);
    CHECK(a.id_to_codeword == b.id_to_codeword);
    CHECK(a.hash() == b.hash());
    for (int32_t id = Vocabulary::kReserved; id < a.size(); ++id)
        CHECK(a.encode(a.decode(id)) == id);
}

TEST_CASE("frame adds START and END, unseen becomes UNK") {
    auto v = build_vocab({raw({1, 2, 3})});
    std::vector<uint64_t> forty_nine(49, 1);
    auto framed = frame(raw(forty_nine), v);
    CHECK(framed.ids.size() == 51);
    CHECK(framed.ids.front() == Vocabulary::kStart);
    CHECK(framed.ids.back() == Vocabulary::kEnd);

    auto empty = frame(raw({}), v);
    CHECK(empty.ids == std::vector<int32_t>{Vocabulary::kStart, Vocabulary::kEnd});

    auto unseen = frame(raw({777}), v);
    CHECK(unseen.ids[1] == Vocabulary::kUnk);
}

TEST_CASE("collate pads to the batch max with trailing PADs") {
    auto v = build_vocab({raw({1, 2, 3})});
    std::vector<uint64_t> long_cw(49, 1), short_cw(21, 2);
    auto batch = collate({frame(raw(long_cw), v), frame(raw(short_cw), v)});
    CHECK(batch.max_len == 51);
    CHECK(batch.lengths == std::vector<int64_t>{51, 23});
    for (int64_t l = 23; l < 51; ++l) CHECK(batch.ids[1 * 51 + l] == Vocabulary::kPad);
}

TEST_CASE("pack/unpack codeword round trip") {
    for (const int64_t vars : {5, 100}) {
        for (int64_t i = 0; i < vars; i += 3)
            for (int64_t j = 0; j < vars; j += 7) {
                const auto key = pack_codeword({i, j}, vars);
                CHECK(unpack_codeword(key, 2, vars) == std::vector<int64_t>{i, j});
            }
    }
    CHECK(format_codeword(pack_codeword({17, 42}, 100), 2, 100) == "17-42");
}

TEST_CASE("corpus file round trip") {
    auto v = build_vocab({raw({1, 2, 3})});
    std::vector<TokenSequence> corpus = {frame(raw({1, 2, 1}, 3, "p00"), v),
                                         frame(raw({3}, 1, "p01"), v)};
    const auto file = std::filesystem::temp_directory_path() / "vqcpc_corpus_test.txt";
    write_corpus(corpus, file);
    auto loaded = read_corpus(file);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].ids == corpus[0].ids);
    CHECK(loaded[0].label == 3);
    CHECK(loaded[0].participant_id == "p00");
    CHECK(loaded[1].ids == corpus[1].ids);
    CHECK(loaded[1].label == 1);
    std::filesystem::remove(file);
}

TEST_CASE("vocab file round trip keeps ids and hash") {
    auto v = build_vocab({raw({11, 5, 900, 5})});
    const auto file = std::filesystem::temp_directory_path() / "vqcpc_vocab_test.json";
    write_vocab(v, file);
    auto loaded = read_vocab(file);
    CHECK(loaded.size() == v.size());
    CHECK(loaded.hash() == v.hash());
    for (int32_t id = Vocabulary::kReserved; id < v.size(); ++id)
        CHECK(loaded.decode(id) == v.decode(id));
    std::filesystem::remove(file);
}

TEST_CASE("histograms are per-class distributions") {
    auto v = build_vocab({raw({1, 2, 3, 4})});
    std::vector<TokenSequence> corpus;
    // class 0: a single token everywhere (static-like)
    corpus.push_back(frame(raw({1, 1, 1, 1, 1, 1}, 0), v));
    corpus.push_back(frame(raw({1, 1, 1, 1, 1, 1}, 0), v));
    // class 1: spread over tokens (dynamic-like)
    corpus.push_back(frame(raw({1, 2, 3, 4, 2, 3}, 1), v));
    auto h = class_histograms(corpus);
    REQUIRE(h.size() == 2);
    CHECK(h[0].size() == 1);
    CHECK(h[0].begin()->second == doctest::Approx(1.0));
    for (const auto& [cls, hist] : h) {
        double sum = 0.0;
        for (const auto& [id, frac] : hist) sum += frac;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    // static class concentrates: top-1 fraction strictly larger
    double top0 = 0.0, top1 = 0.0;
    for (const auto& [id, f] : h[0]) top0 = std::max(top0, f);
    for (const auto& [id, f] : h[1]) top1 = std::max(top1, f);
    CHECK(top0 > top1);
}

TEST_CASE("histogram csv and figures are written") {
    auto v = build_vocab({raw({1, 2})});
    std::vector<TokenSequence> corpus = {frame(raw({1, 2, 2}, 0), v), frame(raw({1}, 1), v)};
    auto h = class_histograms(corpus);
    const auto dir = std::filesystem::temp_directory_path() / "vqcpc_hist_test";
    std::filesystem::create_directories(dir);
    write_histograms_csv(h, dir / "histograms.csv");
    write_histogram_figures(h, dir);
    CHECK(std::filesystem::exists(dir / "histograms.csv"));
    CHECK(std::filesystem::exists(dir / "hist_class0.svg"));
    CHECK(std::filesystem::exists(dir / "hist_class1.svg"));
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
