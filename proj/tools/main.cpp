#include <iostream>

#include "jcnp/cli.hpp"

int main(int argc, char** argv) {
    return jcnp::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
