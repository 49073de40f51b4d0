#include <iostream>

#include "rotcool/cli.hpp"

int main(int argc, char** argv) { return rotcool::cli::run(argc, argv, std::cout, std::cerr); }
