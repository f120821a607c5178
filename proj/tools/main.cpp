#include "shadowrank/cli.hpp"

int main(int argc, char** argv) { return shadowrank::run_cli(argc, argv); }
