#include "pavetwin/cli.hpp"

int main(int argc, char** argv) { return pavetwin::run_cli(argc, argv); }
