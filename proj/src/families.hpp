#pragma once
// Ground-truth input construction: exactly commuting perturbed families made
// by unitary conjugation of diagonal normal forms, plus the built-in
// frequency presets used throughout the tests and the CLI.

#include <string>
#include <vector>

#include "freq.hpp"
#include "symbol.hpp"

namespace qbnf::fam {

struct FamilySpec {
  freq::FrequencyMatrix omega;
  sym::Symbol W_gen;        // hermitian generator of the conjugation
  sym::VectorSymbol B_gen;  // q = 0 diagonal corrections, one per row
  double hbar = 1.0;
  double lie_tol = 1e-15;
  double rho = 2.0;  // width for verification norms and series tolerances
  // When set, an extra non-commuting atom of the given size is planted in
  // component 0 and the commutation verification is skipped.
  bool violate_commutation = false;
  double violation_scale = 1e-4;
};

struct Family {
  sym::VectorSymbol V;           // perturbations: H_i = L_{omega_i} + V_i
  sym::VectorSymbol B_expected;  // q = 0 atoms; the identity map is implicit
  double max_commutator = 0.0;   // largest pairwise bracket norm measured
};

// Conjugates each L_{omega_i} + B_gen_i by exp(i W_gen / hbar) and returns
// the perturbation V_i beyond the untouched linear part.  The family then
// commutes pairwise by construction; this is re-verified with exact bracket
// arithmetic before returning (threshold 1e-12 * max(1, ||V||)).
Family generate_commuting_family(const FamilySpec& spec);

// Pairwise commutator norms of {L_{omega_i} + V_i}: max over i < j of
// || [L_i + V_i, L_j + V_j] / i hbar ||_rho.  Exposed for tests.
double family_commutator_norm(const freq::FrequencyMatrix& om,
                              const sym::VectorSymbol& V, double hbar,
                              const sym::NormParams& np);

// Named presets.  Unknown names raise ConfigError.
freq::FrequencyMatrix builtin_frequencies(const std::string& name);
std::vector<std::string> builtin_frequency_names();

// The default desk-scale spec used by the CLI generator and the acceptance
// runs: two angle variables, golden-ratio frequencies, m rows (1 or 2),
// atom scales tuned so the generated ||V||_2 is close to 1e-3.
FamilySpec default_family_spec(int m, double hbar);

}  // namespace qbnf::fam
