#include "depthgan/cli.hpp"

int main(int argc, char** argv) { return depthgan::cli_main(argc, argv); }
