#include <iostream>

#include "tvreg/cli.hpp"

int main(int argc, char** argv) {
  return tvreg::cli::run_cli(argc, argv, std::cout, std::cerr);
}
