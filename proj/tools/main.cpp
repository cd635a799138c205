#include "cli.hpp"

int main(int argc, char** argv) { return wncs::cli::run(argc, argv); }
