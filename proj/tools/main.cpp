#include "ooc/cli/cli.hpp"

int main(int argc, char** argv) { return ooc::cli::run_command(argc, argv); }
