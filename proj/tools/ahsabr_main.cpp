#include <iostream>

#include "ahsabr/cli.hpp"

int main(int argc, char** argv) { return ahsabr::cli::run(argc, argv, std::cout, std::cerr); }
