#pragma once

// Batch experiment runner. Subcommands: constants, count, sample, chain-sim,
// hit, extremes, compare-prefix, ldp, clt.
//
// Exit codes: 0 success, 2 invalid configuration, 3 resource guard breach,
// 1 any other failure. Output goes to --out, else to
// $TIGHTCHAINS_OUTPUT_DIR/<subcommand>.<ext>, else to `out`.

#include <ostream>
#include <string>
#include <vector>

namespace tc::cli {

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tc::cli
