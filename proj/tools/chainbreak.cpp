#include <iostream>

#include "chainbreak/cli.hpp"

int main(int argc, char** argv) { return chainbreak::cli::main(argc, argv, std::cout, std::cerr); }
