// Umbrella header.

#ifndef NV0_NV0_HPP
#define NV0_NV0_HPP

#include "nv0/units.hpp"
#include "nv0/linalg.hpp"
#include "nv0/params.hpp"
#include "nv0/hamiltonian.hpp"
#include "nv0/fields.hpp"
#include "nv0/dynamics.hpp"
#include "nv0/dataset.hpp"
#include "nv0/estimation.hpp"
#include "nv0/experiments.hpp"
#include "nv0/config.hpp"

#endif  // NV0_NV0_HPP
