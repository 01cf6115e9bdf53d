#pragma once

#include <string>
#include <vector>

#include "motedit/synth.hpp"
#include "motedit/tensor.hpp"

namespace motedit {

// Motion-to-motion retrieval scoring. Motions are embedded by mean-pooling
// their codec features over frames; similarity is cosine. Ranks are 1-based;
// ties are broken by stable index order after a seeded shuffle, so a fully
// tied gallery of 32 yields an expected average rank of 16.5.

struct RetrievalMetrics {
    double r1 = 0, r2 = 0, r3 = 0; // R@k in percent
    double avg_rank = 0;
};

struct RetrievalRow {
    std::string protocol;  // "batch32" or "full"
    std::string direction; // "g2t" or "g2s"
    RetrievalMetrics mean;
    double ci95 = 0; // 1.96 * sd / sqrt(runs), over per-run avg_rank
    int runs = 0;
};

// Paired evaluation set: row i of `queries` is the generated motion whose true
// counterpart is row i of `gallery` (targets for g2t, sources for g2s).
struct RetrievalInput {
    Tensor queries; // [N x D]
    Tensor gallery; // [N x D]
};

Tensor pooled_embedding(const FrozenMotionCodec& codec, const MotionSequence& motion); // [1 x D]
Tensor stack_embeddings(const FrozenMotionCodec& codec,
                        const std::vector<const MotionSequence*>& motions); // [N x D]

double cosine_similarity(const Tensor& a, const Tensor& b); // [1 x D] each

// One pass with a given shuffle. gallery_size 0 means the whole set is one
// gallery; otherwise the shuffled set is split into disjoint galleries of that
// size (remainder dropped) and every member queries its own gallery.
RetrievalMetrics evaluate_run(const RetrievalInput& in, int gallery_size, Rng& rng);

// Repeated runs with per-run shuffles; protocol is "batch32" or "full".
RetrievalRow evaluate_protocol(const RetrievalInput& in, const std::string& protocol,
                               const std::string& direction, int runs, uint64_t seed);

// CSV, header protocol,direction,R1,R2,R3,AvgR,ci95
std::string retrieval_report_csv(const std::vector<RetrievalRow>& rows);

// Area under the ROC curve via average ranks (ties get the midrank). labels
// are 0/1 and both classes must be present.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

} // namespace motedit
