#include "gdgc/cli.hpp"

int main(int argc, char** argv) { return gdgc::run_cli(argc, argv); }
