#include <iostream>

#include "gmsde/cli.hpp"

int main(int argc, char** argv) { return gmsde::cli::run(argc, argv, std::cout, std::cerr); }
