#pragma once

#include "ergokit/errors.hpp"
#include "ergokit/logmath.hpp"
#include "ergokit/expression.hpp"
#include "ergokit/model.hpp"
#include "ergokit/verdict.hpp"
#include "ergokit/lattice.hpp"
#include "ergokit/quadrature.hpp"
#include "ergokit/ladder.hpp"
#include "ergokit/bd_criteria.hpp"
#include "ergokit/eigensolver.hpp"
#include "ergokit/bd_spectral.hpp"
#include "ergokit/diffusion.hpp"
#include "ergokit/report.hpp"
