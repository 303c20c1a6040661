#include "grdme/network.hpp"

#include <cmath>

#include "grdme/errors.hpp"

namespace grdme {

int ReactionNetwork::add_species(std::string name, double D, double sigma) {
  if (!(D >= 0) || !std::isfinite(D)) throw ConfigError("species " + name + ": D must be >= 0");
  if (!(sigma >= 0) || !std::isfinite(sigma)) throw ConfigError("species " + name + ": sigma must be >= 0");
  for (const auto& s : species_)
    if (s.name == name) throw ConfigError("duplicate species name " + name);
  species_.push_back({std::move(name), D, sigma});
  return static_cast<int>(species_.size()) - 1;
}

void ReactionNetwork::check_species(int s) const {
  if (s < 0 || s >= static_cast<int>(species_.size()))
    throw ConfigError("unknown species index " + std::to_string(s));
}

int ReactionNetwork::add_unimolecular(int reactant, std::vector<int> products, double rate) {
  check_species(reactant);
  for (int p : products) check_species(p);
  if (!(rate >= 0) || !std::isfinite(rate)) throw ConfigError("unimolecular rate must be finite and >= 0");
  unimolecular_.push_back({reactant, std::move(products), rate});
  return static_cast<int>(unimolecular_.size()) - 1;
}

int ReactionNetwork::add_bimolecular(int a, int b, std::vector<int> products, double k_a, double k_d,
                                     bool diffusion_limited) {
  check_species(a);
  check_species(b);
  for (int p : products) check_species(p);
  if (products.size() > 2) throw ConfigError("bimolecular reactions take at most two products");
  if (k_d > 0 && products.size() != 1)
    throw ConfigError("a reversible bimolecular reaction needs exactly one product");
  BimolecularReaction r{a, b, std::move(products), k_a, k_d, diffusion_limited};
  micro_params(r).validate();
  if (species_[a].sigma + species_[b].sigma <= 0)
    throw ConfigError("bimolecular reactants need a positive reaction radius");
  bimolecular_.push_back(std::move(r));
  return static_cast<int>(bimolecular_.size()) - 1;
}

int ReactionNetwork::species_index(std::string_view name) const {
  for (std::size_t i = 0; i < species_.size(); ++i)
    if (species_[i].name == name) return static_cast<int>(i);
  throw ConfigError("unknown species " + std::string(name));
}

MicroParams ReactionNetwork::micro_params(const BimolecularReaction& r) const {
  MicroParams m;
  m.sigma = species_.at(r.a).sigma + species_.at(r.b).sigma;
  m.D = species_.at(r.a).D + species_.at(r.b).D;
  m.k_a = r.diffusion_limited ? 0 : r.k_a;
  m.k_d = r.k_d;
  m.diffusion_limited = r.diffusion_limited;
  return m;
}

ReactionNetwork cascade_network(const CascadeParams& p) {
  ReactionNetwork net;
  const int s1 = net.add_species("S1", p.D, p.sigma1);
  const int s11 = net.add_species("S11", p.D, p.sigma11);
  const int s12 = net.add_species("S12", p.D, p.sigma12);
  const int s2 = net.add_species("S2", p.D, p.sigma2);
  const int s21 = net.add_species("S21", p.D, p.sigma21);
  const int s22 = net.add_species("S22", p.D, p.sigma22);
  const int s3 = net.add_species("S3", p.D, p.sigma3);
  net.add_unimolecular(s1, {s11, s12}, p.k_d);
  net.add_bimolecular(s11, s12, {s2}, p.k_a);
  net.add_unimolecular(s2, {s21, s22}, p.k_d);
  net.add_bimolecular(s21, s22, {s3}, p.k_a);
  return net;
}

}  // namespace grdme
