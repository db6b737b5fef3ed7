#include "backtime/cli.hpp"

int main(int argc, char** argv) { return backtime::run_cli(argc, argv); }
