#pragma once

#include "cli/config.hpp"

namespace anoco::cli {

void run_score(const RunConfig& config);
void run_eval(const RunConfig& config);
void run_ablate(const RunConfig& config);
void run_sweep_lambda(const RunConfig& config);

void run(const RunConfig& config);

}  // namespace anoco::cli
