#pragma once

#include <vector>

#include "mds/feature_sequence.hpp"
#include "mds/model.hpp"
#include "mds/signal.hpp"

namespace mds {

/// Every intermediate of one forward pass. Signals are stored channel-major
/// (rows = channels, cols = time).
struct ForwardTrace {
    std::vector<Matrix> activations;  ///< [0] = input, [l+1] = tanh output of trunk layer l
    Matrix head;                      ///< 2M raw head channels: labels F_m then weights w_m
    Matrix delayed;                   ///< head channels after each cluster's sinc kernel
    Matrix softmax;                   ///< M x T cluster probabilities
    std::vector<double> y;            ///< final prediction
    std::vector<double> taus;         ///< taus the trace was computed with
    double fs = 0.0;

    int clusters() const noexcept { return static_cast<int>(softmax.rows()); }
    std::size_t length() const noexcept { return y.size(); }
};

/// Runs trunk, head, delayed sinc layers and the soft cluster average.
/// Throws ShapeMismatch when X does not match the model's input_dim or fs.
ForwardTrace forward(const MdsModel& model, const FeatureSequence& x);

SampledSignal predict(const MdsModel& model, const FeatureSequence& x);

/// Prediction from the single most likely cluster at each step (ties -> lowest index).
SampledSignal hard_select(const ForwardTrace& trace);

struct Gradients {
    MdsParams params;    ///< dLoss/dparameter, same layout as MdsModel::params
    double loss = 0.0;   ///< 1 - CCC + l2 * sum of squared conv weights
    double ccc = 0.0;
};

/// Reverse-mode gradients of 1 - CCC(y_true, y) + l2 * ||W||^2 for a trace
/// produced by forward(model, x).
Gradients backward(const MdsModel& model, const FeatureSequence& x,
                   const SampledSignal& y_true, const ForwardTrace& trace);

/// Loss value only, using a fresh forward pass.
double loss(const MdsModel& model, const FeatureSequence& x, const SampledSignal& y_true);

}  // namespace mds
