#include "cli.hpp"

int main(int argc, char** argv) { return scav::cli::run(argc, argv); }
