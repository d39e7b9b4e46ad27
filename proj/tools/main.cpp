#include "cbml/cli.hpp"

int main(int argc, char** argv) { return cbml::run_cli(argc, argv); }
