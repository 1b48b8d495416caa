#pragma once

// Umbrella header: row-action (Kaczmarz) solvers with pluggable selection
// rules, orthogonality-graph bookkeeping, convergence-rate constants, and
// seeded experiment generators.

#include "kaczmarz/coordinate_descent.hpp"
#include "kaczmarz/io.hpp"
#include "kaczmarz/linear_system.hpp"
#include "kaczmarz/orthogonality.hpp"
#include "kaczmarz/problems.hpp"
#include "kaczmarz/rates.hpp"
#include "kaczmarz/residual_heap.hpp"
#include "kaczmarz/rng.hpp"
#include "kaczmarz/selection.hpp"
#include "kaczmarz/solver.hpp"
#include "kaczmarz/sparse_matrix.hpp"
#include "kaczmarz/spectral.hpp"
#include "kaczmarz/sum_tree.hpp"
