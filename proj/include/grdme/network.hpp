#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "grdme/calibration.hpp"

namespace grdme {

struct Species {
  std::string name;
  double D = 0;
  double sigma = 0;
};

struct UnimolecularReaction {
  int reactant = -1;
  std::vector<int> products;
  double rate = 0;
};

// A + B -> products. With k_d > 0 and a single product C the reverse
// C -> A + B is added at the calibrated mesoscopic dissociation rate.
struct BimolecularReaction {
  int a = -1;
  int b = -1;
  std::vector<int> products;
  double k_a = 0;
  double k_d = 0;
  bool diffusion_limited = false;
};

class ReactionNetwork {
 public:
  int add_species(std::string name, double D, double sigma = 0);
  int add_unimolecular(int reactant, std::vector<int> products, double rate);
  int add_bimolecular(int a, int b, std::vector<int> products, double k_a, double k_d = 0,
                      bool diffusion_limited = false);

  int species_index(std::string_view name) const;
  const std::vector<Species>& species() const { return species_; }
  const std::vector<UnimolecularReaction>& unimolecular() const { return unimolecular_; }
  const std::vector<BimolecularReaction>& bimolecular() const { return bimolecular_; }

  // sigma = sigma_A + sigma_B and D = D_A + D_B.
  MicroParams micro_params(const BimolecularReaction& r) const;

 private:
  void check_species(int s) const;
  std::vector<Species> species_;
  std::vector<UnimolecularReaction> unimolecular_;
  std::vector<BimolecularReaction> bimolecular_;
};

// Parameters of the two-step dissociation/association cascade
//   S1 -> S11 + S12,  S11 + S12 -> S2,  S2 -> S21 + S22,  S21 + S22 -> S3.
struct CascadeParams {
  double D = 1e-12;
  double k_d = 10;
  double k_a = 1e-19;
  double sigma1 = 1e-9;
  double sigma11 = 0.8e-9;
  double sigma12 = 0.8e-9;
  double sigma2 = 2e-9;
  double sigma21 = 1.8e-9;
  double sigma22 = 1.8e-9;
  double sigma3 = 2.5e-9;
  double L = 1e-6;
  int initial_S1 = 100;
};

// Species order: S1, S11, S12, S2, S21, S22, S3.
ReactionNetwork cascade_network(const CascadeParams& p);

}  // namespace grdme
