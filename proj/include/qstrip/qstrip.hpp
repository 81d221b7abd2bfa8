#pragma once

// Strip-wise energy accounting for incompressible flow on the periodic
// torus: spectral solvers, Bernoulli-function level sets, isosurface
// quadrature, and the energy ledger that ties them together.

#include "qstrip/bernoulli.hpp"
#include "qstrip/config.hpp"
#include "qstrip/errors.hpp"
#include "qstrip/field.hpp"
#include "qstrip/flow.hpp"
#include "qstrip/grid.hpp"
#include "qstrip/isosurface.hpp"
#include "qstrip/ledger.hpp"
#include "qstrip/snapshot.hpp"
#include "qstrip/spectral.hpp"
#include "qstrip/strip.hpp"
