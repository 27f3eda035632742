#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace engage::core {

// Shared read-only token resources: embedding vectors keyed by embedding_id
// plus the fixed 10-tag coarse POS inventory.
struct Lexicon {
    std::unordered_map<std::string, std::vector<double>> embeddings;
    std::vector<std::string> pos_tags;  // exactly 10, file order

    int embedding_dim() const;
    // Index into pos_tags, or -1 when the tag is not in the inventory.
    int pos_index(const std::string& tag) const;
};

Lexicon load_lexicon(const std::filesystem::path& lexicon_jsonl,
                     const std::filesystem::path& pos_tags_txt);
void write_lexicon(const Lexicon& lex, const std::filesystem::path& lexicon_jsonl,
                   const std::filesystem::path& pos_tags_txt);

}  // namespace engage::core
