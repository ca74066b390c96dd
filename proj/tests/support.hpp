#pragma once

#include "bjet/identity_suite.hpp"

namespace bjet::testing {

using suite::oracle_gap;
using suite::parity_part;
using suite::random_amplitude;
using suite::random_point;
using suite::random_samples;
using suite::Samples;

} // namespace bjet::testing
