#pragma once

#include <array>
#include <span>
#include <vector>

#include "core/lexicon.hpp"
#include "core/types.hpp"

namespace engage::ipu {

inline constexpr int kProsodicDim = 14;
inline constexpr int kPrevLabelDim = 5;
inline constexpr int kPosDim = 10;

// Order: duration_s, voiced/unvoiced intensity ratio, pitch {mean, median,
// slope, min, max, range} over voiced frames, intensity {mean, median, slope,
// min, max, range} over all frames. Pitch features are all 0 when no frame is
// voiced; the intensity ratio is 0 when either frame set is empty. The ratio
// is computed in the linear energy domain, not in dB.
std::array<double, kProsodicDim> extract_prosodic(const core::IpuRecord& ipu);

// 55 features when the lexicon carries 40-dim embeddings: the previous 5
// classifications (most recent first, 0 when absent), the L2-normalized mean
// of this IPU's token embeddings, and the normalized POS-tag histogram.
// Unknown embedding ids contribute zero vectors; an unknown POS tag is an error.
std::vector<double> extract_linguistic(const core::IpuRecord& ipu,
                                       std::span<const double> history,
                                       const core::Lexicon& lexicon);

inline int linguistic_dim(const core::Lexicon& lexicon) {
    return kPrevLabelDim + lexicon.embedding_dim() + kPosDim;
}

}  // namespace engage::ipu
