#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "tablevc/repository.hpp"

namespace tablevc::harness {

struct ExperimentOptions {
  std::string name = "E2";  // E1 | E2 | E3 | E4
  std::size_t base_rows = 1000000;
  std::size_t change_rows = 1000;
  bool primary_key = true;
  double overlap_pct = 0.1;
  std::uint64_t seed = 7;
  std::filesystem::path workdir;  // must not exist yet
  bool verify = true;
  RepoOptions repo_options;
};

// Rows changed by change sets C1..C4: 10^2 up to 10^5.
std::size_t change_set_rows(std::string_view name);

// E1 clone vs copy, E2 diff and merge vs the full-scan arm, E3 four disjoint
// branches merged back, E4 the same with overlapping keys under ACCEPT.
nlohmann::ordered_json run_experiment(const ExperimentOptions& options);

}  // namespace tablevc::harness
