#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tsc/trainer.hpp"

namespace tsc {

// Everything a run can be configured with.  Populated from a flat
// `key = value` config file (comments start with '#'); command-line flags
// override file values.  Unknown keys are rejected.
struct RunConfig {
  TrainConfig train;
  int pool_size = 40000;       // patches sampled from the image corpus
  double eval_fraction = 0.1;  // held-out tail for comparison evaluation
  int sc_epochs = -1;          // baseline epochs; -1 mirrors train.epochs
};

RunConfig parse_config_text(const std::string& text);

// "4x8" -> (4, 8).  Throws ConfigError on malformed input.
std::pair<int, int> parse_layout(const std::string& text);

// Entry point behind the binary: returns the process exit code.
//   0  success
//   2  configuration problem (bad flags, bad config file, bad layout)
//   3  data problem (missing or malformed input files)
//   4  numerical abort (overflow, non-convergence)
// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace tsc
