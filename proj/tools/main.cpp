#include <vector>

#include "controlgan/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return controlgan::run_cli(args);
}
