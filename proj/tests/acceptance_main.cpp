// Acceptance suite: runs every criterion end to end and prints one
// pass/fail line per criterion.  Exit code is nonzero iff any check fails.
#include <iostream>

#include "kramers/verify.hpp"

int main() {
  kramers::RunManifest mf;
  kramers::VerifyOptions opt;
  opt.threads = 0;  // default_thread_count / KRAMERS_THREADS
  auto report = kramers::run_verification(mf, opt);
  report.print(std::cout);
  return report.all_passed() ? 0 : 1;
}
