#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace permcca::cli {

// Exit codes: 0 success, 1 numerical failure, 2 invalid input or options.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

} // namespace permcca::cli
