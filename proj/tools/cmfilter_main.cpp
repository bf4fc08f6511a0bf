#include <iostream>

#include "cmfilter/commands.hpp"

int main(int argc, char** argv) { return cmf::cli_main(argc, argv, std::cout, std::cerr); }
