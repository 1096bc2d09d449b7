#include <string>
#include <vector>

#include "lpvce/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lpvce::dispatch(args);
}
