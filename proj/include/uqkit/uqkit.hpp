#ifndef UQKIT_UQKIT_HPP_
#define UQKIT_UQKIT_HPP_

#include "uqkit/confidence/density_band.hpp"
#include "uqkit/confidence/quantile_ci.hpp"
#include "uqkit/core/config.hpp"
#include "uqkit/core/csv.hpp"
#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"
#include "uqkit/core/parallel.hpp"
#include "uqkit/density/kde.hpp"
#include "uqkit/model_error/avm.hpp"
#include "uqkit/model_error/bootstrap.hpp"
#include "uqkit/model_error/gp_discrepancy.hpp"
#include "uqkit/optim/nelder_mead.hpp"
#include "uqkit/randgen/mvn.hpp"
#include "uqkit/randgen/random.hpp"
#include "uqkit/surrogate/basis.hpp"
#include "uqkit/surrogate/fit.hpp"
#include "uqkit/surrogate/improved.hpp"
#include "uqkit/surrogate/io.hpp"
#include "uqkit/synthetic/systems.hpp"
#include "uqkit/version.hpp"

#endif  // UQKIT_UQKIT_HPP_
