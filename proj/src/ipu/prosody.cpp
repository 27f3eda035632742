#include <algorithm>
#include <cmath>

#include "ipu/features.hpp"
#include "util/error.hpp"
#include "util/num.hpp"

namespace engage::ipu {

namespace {

struct TrackStats {
    double mean = 0.0, median = 0.0, slope = 0.0, min = 0.0, max = 0.0, range = 0.0;
};

TrackStats stats_of(const std::vector<double>& times, const std::vector<double>& values) {
    TrackStats s;
    if (values.empty()) return s;
    s.mean = mean_of(values);
    s.median = median_of(values);
    s.slope = ls_slope(times, values);
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    s.range = s.max - s.min;
    return s;
}

}  // namespace

std::array<double, kProsodicDim> extract_prosodic(const core::IpuRecord& ipu) {
    require(!ipu.f0_hz.empty(), ErrorCode::data, "ipu '" + ipu.ipu_id + "': empty track");
    require(ipu.f0_hz.size() == ipu.intensity_db.size(), ErrorCode::data,
            "ipu '" + ipu.ipu_id + "': track length mismatch");

    size_t n = ipu.f0_hz.size();
    double hop_s = static_cast<double>(ipu.hop_ms) / 1000.0;

    std::vector<double> all_times(n);
    for (size_t i = 0; i < n; ++i) all_times[i] = static_cast<double>(i) * hop_s;

    std::vector<double> voiced_times, voiced_f0;
    double voiced_energy = 0.0, unvoiced_energy = 0.0;
    size_t n_voiced = 0;
    for (size_t i = 0; i < n; ++i) {
        double energy = std::pow(10.0, ipu.intensity_db[i] / 10.0);
        if (ipu.f0_hz[i] > 0.0) {
            voiced_times.push_back(all_times[i]);
            voiced_f0.push_back(ipu.f0_hz[i]);
            voiced_energy += energy;
            ++n_voiced;
        } else {
            unvoiced_energy += energy;
        }
    }

    double ratio = 0.0;
    size_t n_unvoiced = n - n_voiced;
    if (n_voiced > 0 && n_unvoiced > 0)
        ratio = (voiced_energy / static_cast<double>(n_voiced)) /
                (unvoiced_energy / static_cast<double>(n_unvoiced));

    TrackStats pitch = stats_of(voiced_times, voiced_f0);
    TrackStats inten = stats_of(all_times, ipu.intensity_db);

    std::array<double, kProsodicDim> out{};
    out[0] = static_cast<double>(ipu.t_end_ms - ipu.t_start_ms) / 1000.0;
    out[1] = ratio;
    out[2] = pitch.mean;
    out[3] = pitch.median;
    out[4] = pitch.slope;
    out[5] = pitch.min;
    out[6] = pitch.max;
    out[7] = pitch.range;
    out[8] = inten.mean;
    out[9] = inten.median;
    out[10] = inten.slope;
    out[11] = inten.min;
    out[12] = inten.max;
    out[13] = inten.range;
    return out;
}

}  // namespace engage::ipu
