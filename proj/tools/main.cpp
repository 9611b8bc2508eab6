#include <string>
#include <vector>

#include "proseforge/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return proseforge::run_cli(args);
}
