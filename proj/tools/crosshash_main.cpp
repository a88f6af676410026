#include "crosshash/cli.hpp"

int main(int argc, char** argv) { return crosshash::cli::run(argc, argv); }
