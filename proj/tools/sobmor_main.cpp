#include "sobmor/cli.hpp"

int main(int argc, char** argv) { return sobmor::run_cli(argc, argv); }
