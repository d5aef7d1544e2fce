#include "textcnnlab/cli.hpp"

int main(int argc, char** argv) { return textcnn::run_cli(argc, argv); }
