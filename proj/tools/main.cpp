#include "mplab/cli.hpp"

int main(int argc, char** argv) { return mplab::run_cli(argc, argv); }
