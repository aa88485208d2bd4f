#pragma once

#include <ostream>

namespace trinuseg {

/// Entry point behind the `trinuseg` tool. Subcommands: synth, train, eval,
/// complexity, ablate, overlay. Failures print one `error: ...` line to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace trinuseg
