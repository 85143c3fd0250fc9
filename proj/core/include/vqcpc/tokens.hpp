#pragma once
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace vqcpc {

// ============================================================================
// Discrete token streams: raw codewords from a discretizer (VQ or SAX) and
// the framed, vocabulary-indexed sequences the classifier and LM consume.
// ============================================================================

// One window's worth of raw composite codewords. A codeword is the packed
// group-index tuple: key = sum_g idx_g * V^(G-1-g); for single-group
// discretizers (SAX) the key is the symbol itself.
struct RawTokenSequence {
    std::vector<uint64_t> codewords;
    int label = -1;
    std::string participant_id;
};

uint64_t pack_codeword(const std::vector<int64_t>& group_indices, int64_t vars);
std::vector<int64_t> unpack_codeword(uint64_t key, int64_t groups, int64_t vars);
std::string format_codeword(uint64_t key, int64_t groups, int64_t vars);  // "i0-i1"

struct Vocabulary {
    static constexpr int32_t kPad = 0;
    static constexpr int32_t kUnk = 1;
    static constexpr int32_t kStart = 2;
    static constexpr int32_t kEnd = 3;
    static constexpr int32_t kReserved = 4;

    std::unordered_map<uint64_t, int32_t> to_id;
    std::vector<uint64_t> id_to_codeword;  // index = id; first 4 entries are sentinels

    int32_t size() const { return static_cast<int32_t>(id_to_codeword.size()); }
    int32_t encode(uint64_t codeword) const {
        auto it = to_id.find(codeword);
        return it == to_id.end() ? kUnk : it->second;
    }
    uint64_t decode(int32_t id) const { return id_to_codeword.at(id); }
    uint64_t hash() const;  // stable fingerprint for embedding compatibility
};

// Framed sequence: [START] + mapped ids + [END]; unseen codewords -> UNK.
struct TokenSequence {
    std::vector<int32_t> ids;
    int label = -1;
    std::string participant_id;
};

// Ids in first-occurrence order after the reserved ids; deterministic for a
// fixed corpus order. Throws EmptyCorpus.
Vocabulary build_vocab(const std::vector<RawTokenSequence>& train_corpus);

TokenSequence frame(const RawTokenSequence& raw, const Vocabulary& vocab);
std::vector<TokenSequence> frame_corpus(const std::vector<RawTokenSequence>& corpus,
                                        const Vocabulary& vocab);

// Pads a batch to its max length with PAD at the tail.
struct CollatedBatch {
    std::vector<int32_t> ids;  // batch x max_len, row-major
    std::vector<int64_t> lengths;
    int64_t batch = 0;
    int64_t max_len = 0;
};
CollatedBatch collate(const std::vector<TokenSequence>& batch);

// ============================================================================
// Corpus file: one `# participant=<id> label=<l>` line then one line of
// space-separated framed ids per window.
// ============================================================================

void write_corpus(const std::vector<TokenSequence>& corpus, const std::filesystem::path& file);
std::vector<TokenSequence> read_corpus(const std::filesystem::path& file);

void write_vocab(const Vocabulary& vocab, const std::filesystem::path& file);
Vocabulary read_vocab(const std::filesystem::path& file);

// ============================================================================
// Per-class token histograms (fractions of occurrences; reserved ids are
// not counted). Keys: class -> token id -> fraction.
// ============================================================================

using ClassHistograms = std::map<int, std::map<int32_t, double>>;

ClassHistograms class_histograms(const std::vector<TokenSequence>& corpus);
void write_histograms_csv(const ClassHistograms& h, const std::filesystem::path& file);
// One SVG bar chart per class, named hist_class<k>.svg inside out_dir.
void write_histogram_figures(const ClassHistograms& h, const std::filesystem::path& out_dir);

}  // namespace vqcpc
