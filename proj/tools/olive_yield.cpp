#include <iostream>

#include "olive/cli.hpp"

int main(int argc, char** argv) { return olive::cli::run(argc, argv, std::cout, std::cerr); }
