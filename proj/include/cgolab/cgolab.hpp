#pragma once

#include "cgolab/core.hpp"
#include "cgolab/grid.hpp"
#include "cgolab/exponents.hpp"
#include "cgolab/spectral_basis.hpp"
#include "cgolab/resolvent.hpp"
#include "cgolab/kernel_quadrature.hpp"
#include "cgolab/cgo.hpp"
#include "cgolab/forward.hpp"
#include "cgolab/potential.hpp"
#include "cgolab/recovery.hpp"
#include "cgolab/io.hpp"
#include "cgolab/config.hpp"
#include "cgolab/acceptance.hpp"
