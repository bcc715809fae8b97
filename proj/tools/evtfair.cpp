#include "evtfair/cli.hpp"

int main(int argc, char** argv) { return evtfair::run(argc, argv); }
