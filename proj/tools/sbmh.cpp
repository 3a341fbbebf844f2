#include "sbmh/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return sbmh::cli::run(args, std::cout, std::cerr);
}
