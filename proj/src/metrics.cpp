#include "docfsl/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "docfsl/common.hpp"

namespace docfsl {

double accuracy(const std::vector<Label>& predictions, const std::vector<Label>& truths) {
    if (predictions.size() != truths.size()) throw DataError("accuracy: length mismatch");
    if (predictions.empty()) throw DataError("accuracy: empty input");
    size_t correct = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == truths[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double auc(const std::vector<double>& scores, const std::vector<Label>& truths) {
    if (scores.size() != truths.size()) throw DataError("auc: length mismatch");
    size_t n_fake = 0, n_genuine = 0;
    for (Label t : truths) (t == Label::fake ? n_fake : n_genuine)++;
    if (n_fake == 0 || n_genuine == 0) {
        throw DataError("auc: both labels must be present");
    }

    // Rank-sum formulation with midranks for ties: O(n log n).
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double fake_rank_sum = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (size_t t = i; t < j; ++t) {
            if (truths[order[t]] == Label::fake) fake_rank_sum += midrank;
        }
        i = j;
    }
    double u = fake_rank_sum - static_cast<double>(n_fake) * (n_fake + 1) / 2.0;
    return u / (static_cast<double>(n_fake) * static_cast<double>(n_genuine));
}

}  // namespace docfsl
