#pragma once

#include "closed_form.hpp"
#include "companion_assets.hpp"
#include "errors.hpp"
#include "estimation.hpp"
#include "lattice.hpp"
#include "market.hpp"
#include "monte_carlo.hpp"
#include "normal.hpp"
#include "pde_verifier.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "root_finding.hpp"
#include "schedule.hpp"
