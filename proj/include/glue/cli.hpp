#pragma once

// Batch entry point.  Subcommands:
//   generate <name> [n] [--mutate p,r,q] [--out DIR]
//   verify   --family SRC [--samples N] [--tol T] [--seed S] [--epsilon-floor F] [--mutate p,r,q] [--out DIR]
//   morse    (--system SRC | --function EXPR --variables x,y [--box lo:hi,...] [--period P,...])
//            [--resolution N] [--export] [--out DIR]
// A family source is cube<n> (1..5), empty, a Morse built-in (torus, sphere,
// parabola, separable) or a family file.  Exit codes: 0 pass, 1 identity
// failure, 2 input error, 3 numerical abort.

#include <ostream>
#include <string>
#include <vector>

#include "glue/family_model.hpp"

namespace glue {

enum ExitCode { kPass = 0, kIdentityFailure = 1, kInputError = 2, kNumericalAbort = 3 };

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// The family named by a source string, as described above.
StratifiedFamily resolve_family(const std::string& source);

} // namespace glue
