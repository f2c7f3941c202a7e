#include <iostream>

#include "pdlm/cli.hpp"

int main(int argc, char** argv) { return pdlm::run_command(argc, argv, std::cin, std::cout, std::cerr); }
