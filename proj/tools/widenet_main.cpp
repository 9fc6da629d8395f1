#include <iostream>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "widenet/cli.hpp"

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Parameter-sized vectors are allocated per probe; keep them off mmap so
  // every allocation does not fault in fresh zeroed pages.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  return widenet::run_cli(argc, argv, std::cout, std::cerr);
}
