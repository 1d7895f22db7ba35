#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcgain/cli/io.hpp"
#include "qcgain/multipliers.hpp"

namespace qcgain::cli {

struct PropertyResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  std::string summary;                     // one line of statistics
  std::vector<std::string> counterexamples;  // first few failures, human-readable

  bool passed() const { return failures == 0 && cases > 0; }
};

/// Sector-to-increment and increment-to-sector round trips.
PropertyResult increment_suite(std::uint64_t seed, int samples = 1000);

/// Random multipliers at m <= 2 classified by membership_minc (in `mode`) and
/// by the sampled full-block test. Every rejection must come with a witness
/// that checks out: an increment with negative QC value, or slopes where the
/// full-block matrix has a negative eigenvalue.
PropertyResult mfb_suite(std::uint64_t seed, int count = 100,
                               CopositivityMode mode = CopositivityMode::kBruteForce);

/// Members of the vertex class pass the QC on random increments of F_ab.
PropertyResult soundness_suite(std::uint64_t seed, int multipliers = 20, int increments = 50);

/// PSD+N against brute force on random symmetric matrices of order <= 4.
PropertyResult copositivity_suite(std::uint64_t seed, int count = 500);

/// Horn matrix: copositive by brute force, not PSD+N.
PropertyResult horn_suite();

/// h(tx + (1-t)y) - t h(x) - (1-t) h(y) = -t(1-t)(X-Y) R (X-Y), entrywise.
PropertyResult concavity_suite(std::uint64_t seed, int count = 1000);

/// A multiplier claimed to lie in Minc. Fails with a witness increment (and a
/// repeated-nonlinearity counterexample when one exists) if it does not.
PropertyResult mutant_suite(const Mutant& mutant, CopositivityMode mode);

struct VerifyOptions {
  std::uint64_t seed = 1;
  CopositivityMode mode = CopositivityMode::kBruteForce;
  std::optional<Mutant> mutant;
};

struct VerifyReport {
  std::uint64_t seed = 0;
  CopositivityMode mode = CopositivityMode::kBruteForce;
  std::vector<PropertyResult> properties;

  bool all_passed() const;
  std::string to_text() const;
};

VerifyReport run_verify(const VerifyOptions& options);

}  // namespace qcgain::cli
