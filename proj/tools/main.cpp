#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  return record_collector::cli::run(argc, argv, std::cout, std::cerr);
}
