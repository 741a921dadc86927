#include <pdeimg/cli.hpp>

int main(int argc, char** argv)
{
  return pdeimg::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
