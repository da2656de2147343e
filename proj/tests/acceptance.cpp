// Runs the acceptance criteria at full resolution; one PASS/FAIL line per criterion.

#include <iostream>

#include "cgolab/acceptance.hpp"

int main() {
  using namespace cgolab;
  const auto results = run_acceptance(AcceptanceOptions{}, [](const CriterionResult& r) { std::cout << r.line() << std::endl; });
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::cout << (results.size() - std::size_t(failed)) << "/" << results.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
