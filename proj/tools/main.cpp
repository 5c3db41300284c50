#include "survfuse/cli/commands.hpp"

int main(int argc, char** argv) { return survfuse::cli::run_cli(argc, argv); }
