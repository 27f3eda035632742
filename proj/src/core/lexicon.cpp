#include "core/lexicon.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "util/error.hpp"
#include "util/num.hpp"

namespace engage::core {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

int Lexicon::embedding_dim() const {
    if (embeddings.empty()) return 0;
    return static_cast<int>(embeddings.begin()->second.size());
}

int Lexicon::pos_index(const std::string& tag) const {
    auto it = std::find(pos_tags.begin(), pos_tags.end(), tag);
    if (it == pos_tags.end()) return -1;
    return static_cast<int>(it - pos_tags.begin());
}

Lexicon load_lexicon(const fs::path& lexicon_jsonl, const fs::path& pos_tags_txt) {
    Lexicon lex;

    std::ifstream in(lexicon_jsonl, std::ios::binary);
    if (!in) fail_io("cannot open " + lexicon_jsonl.string());
    std::string line;
    size_t lineno = 0;
    int dim = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where =
            lexicon_jsonl.filename().string() + " line " + std::to_string(lineno);
        json j;
        try {
            j = json::parse(line);
            std::string id = j.at("embedding_id").get<std::string>();
            std::vector<double> vec = j.at("vector").get<std::vector<double>>();
            require(all_finite(vec), ErrorCode::data, where + ": non-finite embedding entry");
            if (dim < 0) dim = static_cast<int>(vec.size());
            require(static_cast<int>(vec.size()) == dim, ErrorCode::data,
                    where + ": embedding dimension mismatch");
            require(lex.embeddings.emplace(std::move(id), std::move(vec)).second, ErrorCode::data,
                    where + ": duplicate embedding_id");
        } catch (const json::exception& e) {
            fail_data(where + ": " + e.what());
        }
    }

    std::ifstream tags(pos_tags_txt, std::ios::binary);
    if (!tags) fail_io("cannot open " + pos_tags_txt.string());
    while (std::getline(tags, line)) {
        if (line.empty()) continue;
        require(std::find(lex.pos_tags.begin(), lex.pos_tags.end(), line) == lex.pos_tags.end(),
                ErrorCode::data, "duplicate POS tag '" + line + "'");
        lex.pos_tags.push_back(line);
    }
    require(lex.pos_tags.size() == 10, ErrorCode::data,
            "POS inventory must list exactly 10 tags, found " +
                std::to_string(lex.pos_tags.size()));
    return lex;
}

void write_lexicon(const Lexicon& lex, const fs::path& lexicon_jsonl,
                   const fs::path& pos_tags_txt) {
    std::vector<std::string> ids;
    ids.reserve(lex.embeddings.size());
    for (const auto& [id, _] : lex.embeddings) ids.push_back(id);
    std::sort(ids.begin(), ids.end());

    std::ofstream out(lexicon_jsonl, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot open " + lexicon_jsonl.string() + " for writing");
    for (const std::string& id : ids) {
        ordered_json j;
        j["embedding_id"] = id;
        j["vector"] = lex.embeddings.at(id);
        out << j.dump() << '\n';
    }

    std::ofstream tags(pos_tags_txt, std::ios::binary | std::ios::trunc);
    if (!tags) fail_io("cannot open " + pos_tags_txt.string() + " for writing");
    for (const std::string& t : lex.pos_tags) tags << t << '\n';
}

}  // namespace engage::core
