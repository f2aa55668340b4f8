#include "sigdet/cli.hpp"

int main(int argc, char** argv) { return sigdet::cli::run_cli(argc, argv); }
