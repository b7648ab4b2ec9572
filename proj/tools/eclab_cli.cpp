#include "eclab/cli.hpp"

int main(int argc, char** argv) { return eclab::cli::main(argc, argv); }
