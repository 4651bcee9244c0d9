#include "rrcf/cli.hpp"

int main(int argc, char** argv) { return rrcf::cli::run(argc, argv); }
