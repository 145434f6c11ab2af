#include <iostream>
#include <vector>

#include "tws/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tws::run(std::move(args), std::cout, std::cerr);
}
