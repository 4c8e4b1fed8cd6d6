#pragma once

// Umbrella header for the whole library.

#include "fracstim/closedform.hpp"
#include "fracstim/dsl.hpp"
#include "fracstim/errors.hpp"
#include "fracstim/expr.hpp"
#include "fracstim/fraccalc.hpp"
#include "fracstim/fracseries.hpp"
#include "fracstim/json_io.hpp"
#include "fracstim/linear_form.hpp"
#include "fracstim/mlf.hpp"
#include "fracstim/problem.hpp"
#include "fracstim/quadrature.hpp"
#include "fracstim/rational.hpp"
#include "fracstim/stim.hpp"
#include "fracstim/suite.hpp"
#include "fracstim/sumudu.hpp"
#include "fracstim/symcoeff.hpp"
#include "fracstim/verify.hpp"
