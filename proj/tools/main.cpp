#include "dfit/cli.hpp"

int main(int argc, char** argv) { return dfit::run_cli(argc, argv); }
