#ifndef MIMIC_MIMIC_HPP
#define MIMIC_MIMIC_HPP

#include "mimic/error.hpp"
#include "mimic/families.hpp"
#include "mimic/family.hpp"
#include "mimic/hedge.hpp"
#include "mimic/hk.hpp"
#include "mimic/hp.hpp"
#include "mimic/io.hpp"
#include "mimic/kernel.hpp"
#include "mimic/measure.hpp"
#include "mimic/numerics.hpp"
#include "mimic/path.hpp"
#include "mimic/psi_theta.hpp"
#include "mimic/pushforward.hpp"
#include "mimic/registry.hpp"
#include "mimic/rng.hpp"
#include "mimic/self_similar.hpp"
#include "mimic/simulator.hpp"
#include "mimic/stats.hpp"
#include "mimic/variation.hpp"

#endif  // MIMIC_MIMIC_HPP
