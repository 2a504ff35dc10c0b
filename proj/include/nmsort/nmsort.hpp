/**
 * @file nmsort.hpp
 * @brief Umbrella header for the library (everything except the command line).
 */

#ifndef NMSORT_NMSORT_HPP
#define NMSORT_NMSORT_HPP

#include "nmsort/core.hpp"
#include "nmsort/valuefn.hpp"
#include "nmsort/solver.hpp"
#include "nmsort/constraints.hpp"
#include "nmsort/learn.hpp"
#include "nmsort/robustness.hpp"
#include "nmsort/simulate.hpp"
#include "nmsort/io.hpp"

#endif  // NMSORT_NMSORT_HPP
