#ifndef MIMIC_REGISTRY_HPP
#define MIMIC_REGISTRY_HPP

#include <memory>
#include <string>

#include "mimic/families.hpp"
#include "mimic/self_similar.hpp"

namespace mimic {

/// Family by name: gaussian, exp-brownian, uniform, atom-mix,
/// self-similar:gaussian, self-similar:uniform or self-similar:<profile.json>.
inline FamilyPtr make_family(const std::string& spec) {
  if (spec == "gaussian") return std::make_shared<GaussianFamily>();
  if (spec == "exp-brownian") return std::make_shared<ExpBrownianFamily>();
  if (spec == "uniform") return std::make_shared<UniformFamily>();
  if (spec == "atom-mix") return std::make_shared<AtomMixtureFamily>();
  const std::string prefix = "self-similar:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string rest = spec.substr(prefix.size());
    if (rest == "gaussian") return self_similar_family(gaussian_profile());
    if (rest == "uniform") return self_similar_family(uniform_profile());
    return self_similar_family(load_profile(rest));
  }
  throw ConfigError("unknown family '" + spec + "'");
}

}  // namespace mimic

#endif  // MIMIC_REGISTRY_HPP
