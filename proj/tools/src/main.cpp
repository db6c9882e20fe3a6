#include "cli.hpp"

int main(int argc, char** argv) { return gami::cli::run(argc, argv); }
