#include "empmp/cli.hpp"

int main(int argc, char** argv) { return empmp::cli::run(argc, argv); }
