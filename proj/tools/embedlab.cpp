#include "embedlab/cli.hpp"

int main(int argc, char** argv) {
  return embedlab::run_cli(argc, argv);
}
