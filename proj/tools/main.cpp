#include <iostream>

#include "tgcmpc/cli.hpp"

int main(int argc, char** argv) { return tgcmpc::cli::run(argc, argv, std::cout, std::cerr); }
