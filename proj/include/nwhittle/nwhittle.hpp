#pragma once

#include "nwhittle/error.hpp"
#include "nwhittle/quadrature.hpp"
#include "nwhittle/window.hpp"
#include "nwhittle/spectrum.hpp"
#include "nwhittle/random.hpp"
#include "nwhittle/bandsim.hpp"
#include "nwhittle/minimize.hpp"
#include "nwhittle/estimator.hpp"
#include "nwhittle/asymptotics.hpp"
#include "nwhittle/shapiro_wilk.hpp"
#include "nwhittle/montecarlo.hpp"
#include "nwhittle/config.hpp"
