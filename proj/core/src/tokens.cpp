#include "vqcpc/tokens.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "vqcpc/common.hpp"
#include "vqcpc/errors.hpp"
#include "vqcpc/svg.hpp"

namespace vqcpc {

uint64_t pack_codeword(const std::vector<int64_t>& group_indices, int64_t vars) {
    uint64_t key = 0;
    for (const auto idx : group_indices) key = key * static_cast<uint64_t>(vars) + static_cast<uint64_t>(idx);
    return key;
}

std::vector<int64_t> unpack_codeword(uint64_t key, int64_t groups, int64_t vars) {
    std::vector<int64_t> idx(groups);
    for (int64_t g = groups - 1; g >= 0; --g) {
        idx[g] = static_cast<int64_t>(key % static_cast<uint64_t>(vars));
        key /= static_cast<uint64_t>(vars);
    }
    return idx;
}

std::string format_codeword(uint64_t key, int64_t groups, int64_t vars) {
    const auto idx = unpack_codeword(key, groups, vars);
    std::string s;
    for (size_t g = 0; g < idx.size(); ++g) {
        if (g) s += '-';
        s += std::to_string(idx[g]);
    }
    return s;
}

uint64_t Vocabulary::hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto cw : id_to_codeword) h = fnv1a(&cw, sizeof(cw), h);
    return h;
}

Vocabulary build_vocab(const std::vector<RawTokenSequence>& train_corpus) {
    if (train_corpus.empty()) throw EmptyCorpus("build_vocab: empty corpus");
    Vocabulary v;
    // Sentinel codewords for the reserved slots; never produced by packing
    // since real keys are < V^G <= 2^63.
    for (int32_t r = 0; r < Vocabulary::kReserved; ++r)
        v.id_to_codeword.push_back(~0ULL - static_cast<uint64_t>(r));
    for (const auto& seq : train_corpus)
        for (const auto cw : seq.codewords)
            if (!v.to_id.count(cw)) {
                v.to_id.emplace(cw, v.size());
                v.id_to_codeword.push_back(cw);
            }
    return v;
}

TokenSequence frame(const RawTokenSequence& raw, const Vocabulary& vocab) {
    TokenSequence out;
    out.label = raw.label;
    out.participant_id = raw.participant_id;
    out.ids.reserve(raw.codewords.size() + 2);
    out.ids.push_back(Vocabulary::kStart);
    for (const auto cw : raw.codewords) out.ids.push_back(vocab.encode(cw));
    out.ids.push_back(Vocabulary::kEnd);
    return out;
}

std::vector<TokenSequence> frame_corpus(const std::vector<RawTokenSequence>& corpus,
                                        const Vocabulary& vocab) {
    std::vector<TokenSequence> out;
    out.reserve(corpus.size());
    for (const auto& raw : corpus) out.push_back(frame(raw, vocab));
    return out;
}

CollatedBatch collate(const std::vector<TokenSequence>& batch) {
    CollatedBatch out;
    out.batch = static_cast<int64_t>(batch.size());
    for (const auto& s : batch)
        out.max_len = std::max<int64_t>(out.max_len, static_cast<int64_t>(s.ids.size()));
    out.ids.assign(out.batch * out.max_len, Vocabulary::kPad);
    out.lengths.resize(out.batch);
    for (int64_t b = 0; b < out.batch; ++b) {
        const auto& ids = batch[b].ids;
        out.lengths[b] = static_cast<int64_t>(ids.size());
        std::copy(ids.begin(), ids.end(), out.ids.begin() + b * out.max_len);
    }
    return out;
}

void write_corpus(const std::vector<TokenSequence>& corpus, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write corpus " + file.string());
    for (const auto& seq : corpus) {
        out << "# participant=" << seq.participant_id << " label=" << seq.label << '\n';
        for (size_t i = 0; i < seq.ids.size(); ++i) {
            if (i) out << ' ';
            out << seq.ids[i];
        }
        out << '\n';
    }
}

std::vector<TokenSequence> read_corpus(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw MissingInput("cannot open corpus " + file.string());
    std::vector<TokenSequence> out;
    std::string line;
    TokenSequence cur;
    bool have_meta = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            cur = TokenSequence{};
            std::stringstream ss(line.substr(1));
            std::string tok;
            while (ss >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const auto key = tok.substr(0, eq);
                const auto val = tok.substr(eq + 1);
                if (key == "participant") cur.participant_id = val;
                else if (key == "label") cur.label = std::stoi(val);
            }
            have_meta = true;
            continue;
        }
        if (!have_meta) cur = TokenSequence{};
        std::stringstream ss(line);
        int32_t id;
        cur.ids.clear();
        while (ss >> id) cur.ids.push_back(id);
        out.push_back(cur);
        have_meta = false;
    }
    return out;
}

void write_vocab(const Vocabulary& vocab, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write vocab " + file.string());
    out << "{\n  \"size\": " << vocab.size() << ",\n  \"hash\": " << vocab.hash()
        << ",\n  \"codewords\": [";
    for (int32_t id = Vocabulary::kReserved; id < vocab.size(); ++id) {
        if (id > Vocabulary::kReserved) out << ", ";
        out << vocab.id_to_codeword[id];
    }
    out << "]\n}\n";
}

Vocabulary read_vocab(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw MissingInput("cannot open vocab " + file.string());
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Vocabulary v;
    for (int32_t r = 0; r < Vocabulary::kReserved; ++r)
        v.id_to_codeword.push_back(~0ULL - static_cast<uint64_t>(r));
    const auto lb = all.find('[');
    const auto rb = all.find(']');
    if (lb == std::string::npos || rb == std::string::npos)
        throw Error("malformed vocab file " + file.string());
    std::stringstream ss(all.substr(lb + 1, rb - lb - 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.find_first_not_of(" \t\n") == std::string::npos) continue;
        const uint64_t cw = std::stoull(tok);
        v.to_id.emplace(cw, v.size());
        v.id_to_codeword.push_back(cw);
    }
    return v;
}

ClassHistograms class_histograms(const std::vector<TokenSequence>& corpus) {
    ClassHistograms h;
    std::map<int, int64_t> totals;
    for (const auto& seq : corpus) {
        if (seq.label < 0) continue;
        for (const auto id : seq.ids) {
            if (id < Vocabulary::kReserved) continue;
            h[seq.label][id] += 1.0;
            ++totals[seq.label];
        }
    }
    for (auto& [cls, hist] : h)
        for (auto& [id, frac] : hist) frac /= static_cast<double>(totals[cls]);
    return h;
}

void write_histograms_csv(const ClassHistograms& h, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << "class,token,fraction\n";
    out.precision(12);
    for (const auto& [cls, hist] : h)
        for (const auto& [id, frac] : hist) out << cls << ',' << id << ',' << frac << '\n';
}

void write_histogram_figures(const ClassHistograms& h, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [cls, hist] : h) {
        std::vector<std::pair<std::string, double>> bars;
        bars.reserve(hist.size());
        for (const auto& [id, frac] : hist) bars.emplace_back(std::to_string(id), frac);
        write_bar_chart_svg(out_dir / ("hist_class" + std::to_string(cls) + ".svg"),
                            "class " + std::to_string(cls) + " token fractions", bars);
    }
}

}  // namespace vqcpc
