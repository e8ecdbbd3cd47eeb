#include "hcn/harness/cli.hpp"

int main(int argc, char** argv) { return hcn::cli_main(argc, argv); }
