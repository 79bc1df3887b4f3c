#include <iostream>

#include "vcascade/cli.hpp"

int main(int argc, char** argv) { return vcascade::cli::run(argc, argv, std::cout, std::cerr); }
