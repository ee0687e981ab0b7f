#pragma once

#include <stdexcept>
#include <string>

namespace simper {

// Error taxonomy. The CLI maps categories onto exit codes:
// config_error -> 2, data_error -> 3, everything below numeric_error -> 4.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct io_error : data_error {
    using data_error::data_error;
};
struct insufficient_length_error : data_error {
    using data_error::data_error;
};
struct aliasing_error : data_error {
    using data_error::data_error;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct dimension_error : numeric_error {
    using numeric_error::numeric_error;
};
struct degenerate_signal_error : numeric_error {
    using numeric_error::numeric_error;
};
struct contract_error : numeric_error {
    using numeric_error::numeric_error;
};
struct divergence_error : numeric_error {
    using numeric_error::numeric_error;
};
struct metric_error : numeric_error {
    using numeric_error::numeric_error;
};

}  // namespace simper
