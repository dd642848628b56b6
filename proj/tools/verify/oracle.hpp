#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tpik/hierarchy.hpp"

namespace tpik::verify {

/// Random revolute chain: unit axes, offsets up to 0.3 m with random rotation.
KinematicChain random_chain(std::mt19937_64& rng, std::size_t joints = 7);

struct Scenario {
  KinematicChain chain;
  TaskHierarchy hierarchy;
  std::vector<TaskEvaluation> evaluations;
  std::size_t n_active = 0;
};

/// Position task plus joint-limit and obstacle set-based tasks in random
/// priority order, with exactly `n_active` of the set-based tasks past their
/// activation threshold.
Scenario random_scenario(std::mt19937_64& rng, std::size_t n_active);

struct OracleSolution {
  Vector velocity;                 ///< before cap scaling
  std::uint64_t hierarchy_mask = 0;  ///< inserted set-based tasks by hierarchy index
  std::size_t candidates = 0;
  std::size_t feasible = 0;
};

/// Brute force over every include/exclude choice of the active set-based
/// tasks, filtered by the directional test and reduced by argmax of the norm.
OracleSolution brute_force_solve(const TaskHierarchy& hierarchy,
                                 std::span<const TaskEvaluation> evaluations,
                                 const SolverConfig& config = {});

struct OracleReport {
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  std::size_t by_active[4] = {0, 0, 0, 0};
  double seconds = 0.0;
  std::vector<std::string> failures;  ///< first few mismatch descriptions
};

/// Runs `cases` random scenarios with n_active cycling through 1, 2, 3 and
/// compares solve_step against the brute-force oracle bit for bit.
OracleReport verify_solver(std::size_t cases, std::uint64_t seed);

}  // namespace tpik::verify
