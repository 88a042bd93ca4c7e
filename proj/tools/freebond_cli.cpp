#include <string>
#include <vector>

#include "freebond/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return freebond::cli::run(args);
}
