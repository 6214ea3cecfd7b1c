#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return contrack::cli::run(argc, argv, std::cout, std::cerr); }
