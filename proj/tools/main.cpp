#include "lapconv/cli.hpp"

int main(int argc, char** argv) { return lapconv::cli::run(argc, argv); }
