#pragma once

#include "modphase/error.hpp"
#include "modphase/expr.hpp"
#include "modphase/symbolic.hpp"
#include "modphase/parser.hpp"
#include "modphase/ode.hpp"
#include "modphase/systems.hpp"
#include "modphase/residual.hpp"
#include "modphase/classify.hpp"
#include "modphase/modulation.hpp"
#include "modphase/manifold.hpp"
#include "modphase/phase.hpp"
