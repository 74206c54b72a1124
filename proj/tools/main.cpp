#include "sharp_neuron/cli.hpp"

int main(int argc, char** argv) { return sn::cli::main(argc, argv); }
