#pragma once

#include "lpvce/dataset.hpp"
#include "lpvce/mlp.hpp"

namespace lpvce {

// Expected calibration error over equal-width confidence bins:
// ECE = sum_b (n_b / N) * |accuracy(b) - mean confidence(b)|.
double expected_calibration_error(const MlpClassifier& model, const Dataset& data, Split split,
                                  int bins = 15);

// Temperature minimizing the ECE on the given split, searched on
// log T in [log 0.05, log 20] (coarse grid + golden-section refinement, then
// compared against the current temperature so the result never degrades).
// Does not mutate the model; predictions are T-invariant by construction.
double calibrate_temperature(const MlpClassifier& model, const Dataset& data,
                             Split split = Split::Calibration, int bins = 15);

}  // namespace lpvce
