#include <iostream>
#include <string>
#include <vector>

#include "tsc/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return tsc::run(args, std::cout, std::cerr);
}
