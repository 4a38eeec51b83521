#include "deltabound/cli.hpp"

int main(int argc, char** argv) { return deltabound::run_cli(argc, argv); }
