#include "permcca/cli.hpp"

int main(int argc, char** argv)
{
  return permcca::cli::main(argc, argv);
}
