#include "motedit/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "motedit/format.hpp"

namespace motedit {

namespace {

constexpr int kBatchGallery = 32;
constexpr int kMaxRecallK = 3;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

} // namespace

Tensor pooled_embedding(const FrozenMotionCodec& codec, const MotionSequence& motion) {
    Tensor features = codec.encode(motion); // [T x D]
    Tensor out(1, features.cols());
    const double inv_t = 1.0 / static_cast<double>(features.rows());
    for (int t = 0; t < features.rows(); ++t)
        for (int d = 0; d < features.cols(); ++d) out.at(0, d) += features.at(t, d) * inv_t;
    return out;
}

Tensor stack_embeddings(const FrozenMotionCodec& codec,
                        const std::vector<const MotionSequence*>& motions) {
    if (motions.empty()) fail("retrieval: empty motion set");
    Tensor out(static_cast<int>(motions.size()), codec.model_dim());
    for (size_t i = 0; i < motions.size(); ++i) {
        Tensor e = pooled_embedding(codec, *motions[i]);
        for (int d = 0; d < e.cols(); ++d) out.at(static_cast<int>(i), d) = e.at(0, d);
    }
    return out;
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b) || a.rows() != 1)
        fail("cosine: expected two [1 x d] vectors, got " + a.shape_str() + " and " +
             b.shape_str());
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.numel(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

// Rank of the true counterpart among `members` (original indices, in shuffled
// order). Earlier shuffled position wins ties.
int rank_in_gallery(const Tensor& queries, const Tensor& gallery, int query,
                    const std::vector<int>& members) {
    const int d = queries.cols();
    Tensor q(1, d);
    for (int c = 0; c < d; ++c) q.at(0, c) = queries.at(query, c);
    Tensor g(1, d);
    std::vector<double> sims(members.size());
    int true_pos = -1;
    for (size_t p = 0; p < members.size(); ++p) {
        for (int c = 0; c < d; ++c) g.at(0, c) = gallery.at(members[p], c);
        sims[p] = cosine_similarity(q, g);
        if (members[p] == query) true_pos = static_cast<int>(p);
    }
    if (true_pos < 0) fail("retrieval: gallery is missing the query's counterpart");
    int rank = 1;
    for (size_t p = 0; p < members.size(); ++p) {
        if (static_cast<int>(p) == true_pos) continue;
        if (sims[p] > sims[true_pos]) ++rank;
        else if (sims[p] == sims[true_pos] && static_cast<int>(p) < true_pos) ++rank;
    }
    return rank;
}

} // namespace

RetrievalMetrics evaluate_run(const RetrievalInput& in, int gallery_size, Rng& rng) {
    const int n = in.queries.rows();
    if (!in.queries.same_shape(in.gallery))
        fail("retrieval: query set " + in.queries.shape_str() + " does not pair with gallery " +
             in.gallery.shape_str());
    const int effective = gallery_size == 0 ? n : gallery_size;
    if (effective < kMaxRecallK)
        fail("retrieval: gallery of " + std::to_string(effective) +
             " is smaller than R@" + std::to_string(kMaxRecallK));
    if (gallery_size != 0 && n < gallery_size)
        fail("retrieval: need at least " + std::to_string(gallery_size) +
             " pairs for the batch protocol, have " + std::to_string(n));

    std::vector<int> order = shuffled_indices(n, rng);
    RetrievalMetrics m;
    int counted = 0;
    const int groups = gallery_size == 0 ? 1 : n / gallery_size;
    for (int gi = 0; gi < groups; ++gi) {
        std::vector<int> members;
        if (gallery_size == 0) {
            members = order;
        } else {
            members.assign(order.begin() + gi * gallery_size,
                           order.begin() + (gi + 1) * gallery_size);
        }
        for (int member : members) {
            const int rank = rank_in_gallery(in.queries, in.gallery, member, members);
            m.avg_rank += rank;
            m.r1 += rank <= 1;
            m.r2 += rank <= 2;
            m.r3 += rank <= 3;
            ++counted;
        }
    }
    m.avg_rank /= counted;
    m.r1 *= 100.0 / counted;
    m.r2 *= 100.0 / counted;
    m.r3 *= 100.0 / counted;
    return m;
}

RetrievalRow evaluate_protocol(const RetrievalInput& in, const std::string& protocol,
                               const std::string& direction, int runs, uint64_t seed) {
    int gallery_size;
    if (protocol == "batch32") gallery_size = kBatchGallery;
    else if (protocol == "full") gallery_size = 0;
    else fail("retrieval: unknown protocol '" + protocol + "' (want batch32 or full)");
    if (runs < 1) fail("retrieval: need at least one run");

    std::vector<RetrievalMetrics> per_run(runs);
    for (int r = 0; r < runs; ++r) {
        Rng rng(mix_seed(seed, static_cast<uint64_t>(r)));
        per_run[r] = evaluate_run(in, gallery_size, rng);
    }
    RetrievalRow row;
    row.protocol = protocol;
    row.direction = direction;
    row.runs = runs;
    for (const auto& m : per_run) {
        row.mean.r1 += m.r1 / runs;
        row.mean.r2 += m.r2 / runs;
        row.mean.r3 += m.r3 / runs;
        row.mean.avg_rank += m.avg_rank / runs;
    }
    if (runs > 1) {
        double ss = 0;
        for (const auto& m : per_run) {
            const double d = m.avg_rank - row.mean.avg_rank;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / (runs - 1));
        row.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(runs));
    }
    return row;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::runtime_error("roc_auc: scores and labels differ in length");
    const size_t n = scores.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0; // 1-based midrank
        for (size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    double pos = 0, rank_sum = 0;
    for (size_t k = 0; k < n; ++k)
        if (labels[k]) {
            pos += 1.0;
            rank_sum += rank[k];
        }
    const double neg = static_cast<double>(n) - pos;
    if (pos == 0 || neg == 0) throw std::runtime_error("roc_auc: needs both classes");
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

std::string retrieval_report_csv(const std::vector<RetrievalRow>& rows) {
    std::ostringstream out;
    out << "protocol,direction,R1,R2,R3,AvgR,ci95\n";
    for (const auto& r : rows) {
        out << r.protocol << ',' << r.direction << ',' << csv_double(r.mean.r1) << ','
            << csv_double(r.mean.r2) << ',' << csv_double(r.mean.r3) << ','
            << csv_double(r.mean.avg_rank) << ',' << csv_double(r.ci95) << '\n';
    }
    return out.str();
}

} // namespace motedit
