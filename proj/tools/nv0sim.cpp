#include "nv0/cli.hpp"

int main(int argc, char** argv) { return nv0::cli::run(argc, argv); }
