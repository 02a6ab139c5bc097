#include "treecode/pipeline.hpp"

int main(int argc, char** argv) { return treecode::cli::run(argc, argv); }
