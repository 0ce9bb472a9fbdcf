#include "jumplq/cli.hpp"

int main(int argc, char** argv) { return jumplq::run_cli(argc, argv); }
