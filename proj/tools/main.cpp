#include "loopnest/cli.hpp"

int main(int argc, char** argv) { return loopnest::run_cli(argc, argv); }
