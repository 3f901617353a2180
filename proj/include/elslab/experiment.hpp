#pragma once

#include <map>
#include <string>
#include <vector>

#include "elslab/nonlinearity.hpp"
#include "elslab/potential.hpp"
#include "elslab/shooting.hpp"

namespace elslab::lab {

/// One experiment: a kind tag plus flat key-value parameters, as produced by
/// the command line or a config file. Output placement and global knobs ride
/// alongside the parameters.
struct ExperimentConfig {
    std::string kind;
    std::map<std::string, std::string> kv;
    std::string out_dir = ".";
    std::string name;        ///< artifact basename; derived from kind if empty
    double tol_scale = 1.0;  ///< multiplies check tolerances
    double rmax = 0.0;       ///< overrides the integration horizon when > 0
};

/// One verified claim: behavior-named identifier, outcome, and how much
/// slack was left (margin >= -tolerance means pass for signed checks).
struct CheckLine {
    std::string name;
    bool pass = false;
    double margin = 0.0;
    double tolerance = 0.0;
};

struct ExperimentResult {
    /// 0 pass, 2 validation error, 3 numerical failure, 4 check failed.
    int exit_code = 0;
    std::string summary_json;  ///< serialized summary object
    std::vector<std::string> artifacts;
    std::vector<CheckLine> checks;
    std::string error;  ///< set when exit_code is 2 or 3
};

/// Parse a flat key = value config file (one experiment per file, '#' starts
/// a comment). The keys kind/out_dir/name/tol_scale/rmax are lifted into the
/// struct; everything else lands in kv.
ExperimentConfig parse_config_file(const std::string& path);

/// Ascending list of *.cfg files directly inside dir.
std::vector<std::string> list_config_files(const std::string& dir);

/// Execute one experiment: write its CSV/JSON artifacts under out_dir and
/// return the exit status with a machine-readable summary. Exceptions are
/// absorbed into exit codes 2/3 with the message in `error`.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Resume a trajectory from a solution CSV (columns r,u,du). Curvature is
/// rebuilt from the equation when nl and pot are given, from differencing
/// otherwise; the classification is read from a sibling .json sidecar when
/// one exists, else inferred from monotonicity (increasing rows are treated
/// as the unbounded branch).
shoot::RadialSolution load_solution_csv(const std::string& path, int D,
                                        const nonlin::Nonlinearity* nl,
                                        const pot::RadialPotential* pot);

/// Write columns as CSV with a header row; numbers use %.17g so identical
/// inputs reproduce byte-identical files.
void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<const std::vector<double>*>& columns);

}  // namespace elslab::lab
