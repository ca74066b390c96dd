#include "bjet/cli.hpp"

int main(int argc, char** argv) { return bjet::cli::run(argc, argv, std::cout, std::cerr); }
