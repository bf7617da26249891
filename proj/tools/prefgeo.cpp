#include "prefgeo/cli.hpp"

int main(int argc, char** argv) { return prefgeo::cli::run(argc, argv); }
