#include "abmgp/cli.hpp"

int main(int argc, char** argv) { return abmgp::run_cli(argc, argv); }
