#include "ratos/cli.hpp"

int main(int argc, char** argv) { return ratos::cli::run_cli(argc, argv); }
