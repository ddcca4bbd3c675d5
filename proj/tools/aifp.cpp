#include "aifp/cli.hpp"

int main(int argc, char** argv) { return aifp::cli(argc, argv); }
