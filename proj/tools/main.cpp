#include "cli.hpp"

int main(int argc, char** argv) { return invwave::cli::run_cli(argc, argv); }
