#pragma once

#include "crossdiff/run_config.hpp"

namespace crossdiff::cli {

/// Exit codes: 0 completed, 1 configuration or solver error, 2 divergence
/// (non-finite state or norm ratio beyond the divergence threshold).
int cmd_run(const RunConfig& cfg);
int cmd_check(const RunConfig& cfg);
int cmd_compare(const RunConfig& cfg);
int cmd_spy(const RunConfig& cfg);
int cmd_bench(const RunConfig& cfg);

} // namespace crossdiff::cli
