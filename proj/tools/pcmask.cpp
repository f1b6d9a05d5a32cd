#include "pcm/cli/commands.hpp"

int main(int argc, char** argv) { return pcm::cli::run_cli(argc, argv); }
