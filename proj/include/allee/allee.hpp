#pragma once

#include "allee/error.hpp"
#include "allee/model.hpp"
#include "allee/dopri.hpp"
#include "allee/integrate.hpp"
#include "allee/spectral.hpp"
#include "allee/regimes.hpp"
#include "allee/monitor.hpp"
#include "allee/parallel.hpp"
#include "allee/experiments.hpp"
#include "allee/oracle.hpp"
#include "allee/io.hpp"
