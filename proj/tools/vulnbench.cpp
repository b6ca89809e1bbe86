#include <iostream>

#include "vulnbench/cli.hpp"

int main(int argc, char** argv) {
  return vulnbench::cli::run(argc, argv, std::cout, std::cerr);
}
