#include "bhc/segmentation.hpp"

#include <algorithm>
#include <cmath>

namespace bhc {

void Histogram::validate() const {
    if (counts.empty() || edges.size() != counts.size() + 1)
        throw ValidationError("histogram: edges must be counts + 1");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw ValidationError("histogram: edges must be strictly increasing");
}

Histogram image_histogram(const ReconImage& img, int bins) {
    if (bins < 2 || bins > 512) throw ValidationError("histogram: bins must be in [2, 512]");
    double max_v = 0.0;
    for (double v : img.values) {
        if (!std::isfinite(v)) throw NumericError("histogram: non-finite image value");
        max_v = std::max(max_v, v);
    }
    if (!(max_v > 0.0)) throw NumericError("histogram: image has no positive values");
    Histogram h;
    h.edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i)
        h.edges[i] = max_v * static_cast<double>(i) / static_cast<double>(bins);
    h.counts.assign(bins, 0);
    for (double v : img.values) {
        auto bin = static_cast<int>(std::floor(v / max_v * bins));
        bin = std::clamp(bin, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(bin)];
    }
    return h;
}

std::vector<double> otsu_thresholds(const Histogram& hist, int n_classes) {
    hist.validate();
    if (n_classes < 2 || n_classes > 4)
        throw ValidationError("otsu: n_classes must be in [2, 4]");
    const std::size_t bins = hist.counts.size();
    std::size_t non_empty = 0;
    for (auto c : hist.counts)
        if (c > 0) ++non_empty;
    if (non_empty < static_cast<std::size_t>(n_classes))
        throw NumericError("otsu: histogram has fewer non-empty bins than classes");

    // Prefix sums of count and count * bin-center for O(1) class statistics.
    std::vector<double> cum_w(bins + 1, 0.0), cum_m(bins + 1, 0.0);
    for (std::size_t i = 0; i < bins; ++i) {
        const double center = 0.5 * (hist.edges[i] + hist.edges[i + 1]);
        cum_w[i + 1] = cum_w[i] + static_cast<double>(hist.counts[i]);
        cum_m[i + 1] = cum_m[i] + static_cast<double>(hist.counts[i]) * center;
    }
    const double total_w = cum_w[bins];
    const double total_mean = cum_m[bins] / total_w;

    const int k = n_classes - 1;  // number of thresholds
    std::vector<std::size_t> cut(k), best(k);
    double best_score = -1.0;
    bool found = false;

    // Between-class variance for classes split at bin boundaries
    // cut[0] < cut[1] < ... (threshold = edge index).
    const auto score_of = [&](const std::vector<std::size_t>& cuts) {
        double score = 0.0;
        std::size_t prev = 0;
        for (int c = 0; c <= k; ++c) {
            const std::size_t end = (c == k) ? bins : cuts[static_cast<std::size_t>(c)];
            const double w = cum_w[end] - cum_w[prev];
            if (w > 0.0) {
                const double mean = (cum_m[end] - cum_m[prev]) / w;
                score += w * (mean - total_mean) * (mean - total_mean);
            }
            prev = end;
        }
        return score;
    };

    // Exhaustive search over increasing interior edge tuples; enumeration is
    // lexicographic so the first best tuple is the smallest on ties.
    const std::function<void(int, std::size_t)> recurse = [&](int level, std::size_t start) {
        if (level == k) {
            const double s = score_of(cut);
            if (!found || s > best_score) {
                found = true;
                best_score = s;
                best = cut;
            }
            return;
        }
        const auto remaining = static_cast<std::size_t>(k - level - 1);
        for (std::size_t c = start; c + remaining < bins; ++c) {
            cut[static_cast<std::size_t>(level)] = c;
            recurse(level + 1, c + 1);
        }
    };
    recurse(0, 1);

    std::vector<double> thresholds(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) thresholds[static_cast<std::size_t>(i)] = hist.edges[best[static_cast<std::size_t>(i)]];
    return thresholds;
}

SegmentationResult split_materials(const ReconImage& img,
                                   const std::vector<double>& thresholds) {
    img.grid.validate();
    if (thresholds.empty()) throw ValidationError("split: no thresholds");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (!(thresholds[i] > thresholds[i - 1]))
            throw ValidationError("split: thresholds must be strictly increasing");

    SegmentationResult result;
    result.thresholds = thresholds;
    result.background.assign(img.values.size(), 0);
    const std::size_t k = thresholds.size();
    for (std::size_t c = 0; c < k; ++c) {
        VoxelVolume vol;
        vol.grid = img.grid;
        vol.kind = VolumeKind::attenuation;
        vol.values.assign(img.values.size(), 0.0);
        result.class_volumes.push_back(std::move(vol));
    }
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        const double v = img.values[i];
        if (v < thresholds[0]) {
            result.background[i] = 1;
            continue;
        }
        std::size_t c = k - 1;
        for (std::size_t t = 1; t < k; ++t) {
            if (v < thresholds[t]) {
                c = t - 1;
                break;
            }
        }
        result.class_volumes[c].values[i] = v;
    }
    return result;
}

double measured_mu(const VoxelVolume& class_volume) {
    std::vector<double> support;
    for (double v : class_volume.values)
        if (v != 0.0) support.push_back(v);
    if (support.empty()) throw NumericError("measured_mu: empty class");
    return trimmed_mean(std::move(support), 0.10);
}

}  // namespace bhc
