#pragma once

#include <vector>

#include "docfsl/dataset.hpp"

namespace docfsl {

// Fraction of exact matches; throws on empty or mismatched input.
double accuracy(const std::vector<Label>& predictions, const std::vector<Label>& truths);

// Mann-Whitney AUC: probability that a random fake outscores a random
// genuine, ties counted 0.5. Scores are "fake-ness" (e.g. p_fake). Requires
// both labels present.
double auc(const std::vector<double>& scores, const std::vector<Label>& truths);

}  // namespace docfsl
