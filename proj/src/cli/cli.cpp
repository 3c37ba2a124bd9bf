#include "ooc/cli/cli.hpp"

#include <cstdio>

namespace ooc::cli {

int run_command(int, char**) {
    std::fprintf(stderr, "not wired up yet\n");
    return 2;
}

}  // namespace ooc::cli
