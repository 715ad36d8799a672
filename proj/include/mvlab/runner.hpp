#ifndef MVLAB_RUNNER_HPP
#define MVLAB_RUNNER_HPP

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "mvlab/config.hpp"

namespace mvlab {

struct ReportBundle {
    std::vector<std::filesystem::path> files;
    std::filesystem::path manifest_path;
    bool pass = false;
    std::string summary;
};

// Dispatches the validated config to the owning module, writes the CSVs and
// the JSON manifest. Partial outputs are removed when the run fails. The
// MVLAB_OUT environment variable overrides the configured output directory.
ReportBundle run_experiment(const ExperimentConfig& cfg);

struct SelftestCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct SelftestResult {
    bool pass = false;
    std::vector<SelftestCheck> checks;
};

// Fast oracle suite: assignment vs brute force, OU analytics, mollifier
// envelope properties, Pinsker and prefactor arithmetic.
SelftestResult selftest(std::ostream* log = nullptr);

}  // namespace mvlab

#endif
