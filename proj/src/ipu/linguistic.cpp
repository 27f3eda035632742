#include <cmath>

#include "ipu/features.hpp"
#include "util/error.hpp"

namespace engage::ipu {

std::vector<double> extract_linguistic(const core::IpuRecord& ipu,
                                       std::span<const double> history,
                                       const core::Lexicon& lexicon) {
    require(history.size() == kPrevLabelDim, ErrorCode::usage,
            "history must carry exactly " + std::to_string(kPrevLabelDim) + " entries");
    int emb_dim = lexicon.embedding_dim();
    require(emb_dim > 0, ErrorCode::data, "lexicon carries no embeddings");

    std::vector<double> out;
    out.reserve(kPrevLabelDim + emb_dim + kPosDim);
    for (double h : history) out.push_back(h);

    std::vector<double> mean(emb_dim, 0.0);
    std::vector<double> pos_counts(kPosDim, 0.0);
    for (const core::Token& t : ipu.tokens) {
        auto it = lexicon.embeddings.find(t.embedding_id);
        if (it != lexicon.embeddings.end())
            for (int k = 0; k < emb_dim; ++k) mean[k] += it->second[k];
        int pi = lexicon.pos_index(t.pos);
        require(pi >= 0, ErrorCode::data,
                "ipu '" + ipu.ipu_id + "': POS tag '" + t.pos + "' outside the 10-tag inventory");
        pos_counts[pi] += 1.0;
    }
    if (!ipu.tokens.empty()) {
        double inv = 1.0 / static_cast<double>(ipu.tokens.size());
        double norm2 = 0.0;
        for (double& v : mean) {
            v *= inv;
            norm2 += v * v;
        }
        if (norm2 > 0.0) {
            double inv_norm = 1.0 / std::sqrt(norm2);
            for (double& v : mean) v *= inv_norm;
        }
        for (double& c : pos_counts) c *= inv;
    }
    out.insert(out.end(), mean.begin(), mean.end());
    out.insert(out.end(), pos_counts.begin(), pos_counts.end());
    return out;
}

}  // namespace engage::ipu
