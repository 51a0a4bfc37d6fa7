#include <iostream>

#include "dengue/cli.hpp"

int main(int argc, char** argv) {
  return dengue::cli::run_main(argc, argv, std::cout, std::cerr);
}
