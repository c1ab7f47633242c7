#include <iostream>
#include <string>
#include <vector>

#include "collision_plane/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return collision_plane::cli::run(args, std::cout, std::cerr);
}
