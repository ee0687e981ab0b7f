#pragma once

#include "simper/tensor.hpp"

namespace simper {

// Frame-wise encoder output: a [T x C] tensor plus the sample rate inherited
// from the input clip. T always equals the input frame count.
struct FeatureSeries {
    Tensor values;  // [T x C]
    double sample_rate_hz = 30.0;

    std::size_t length() const { return values.shape()[0]; }
    std::size_t channels() const { return values.shape()[1]; }
};

}  // namespace simper
