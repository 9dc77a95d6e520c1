#include <string>
#include <vector>

#include "levypass/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return levypass::cli::run(std::move(args));
}
