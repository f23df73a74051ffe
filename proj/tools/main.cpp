#include "cli.hpp"

int main(int argc, char** argv) { return fcoc::cli::run(argc, argv); }
