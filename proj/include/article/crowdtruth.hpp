#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "article/dataset.hpp"

namespace article {

// one-hot over (offensive, non_offensive)
struct WorkerVector {
  std::string worker_id;
  std::string unit_id;
  std::array<double, 2> vector{0.0, 0.0};
};

struct QualityScores {
  std::map<std::string, double> wqs;
  std::map<std::string, double> wwa;
  std::map<std::string, double> wua;
  std::map<std::string, double> uqs;
  std::size_t iterations_used = 0;
  bool converged = false;
  std::size_t skipped_single_worker_units = 0;
};

std::vector<WorkerVector> build_vectors(const Dataset& dataset);

// Mutually weighted quality fixpoint: unit quality from pairwise worker
// agreement weighted by worker quality, worker quality from agreement with
// co-workers (WWA) times agreement with unit aggregates (WUA). All scores
// start at 1 and iterate until the largest change drops below tolerance.
// Units with a single worker are skipped and counted.
QualityScores quality_fixpoint(const std::vector<WorkerVector>& vectors,
                               double tolerance = 1e-6, std::size_t max_iter = 100);

// kept iff wqs >= threshold (inclusive)
std::pair<std::set<std::string>, std::set<std::string>> filter_by_wqs(
    const QualityScores& scores, double threshold);

}  // namespace article
