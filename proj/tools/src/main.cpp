#include "adversim/cli.hpp"

int main(int argc, char** argv) { return adversim::cli::main(argc, argv); }
