#pragma once

#include "mpferro/bipartite.hpp"
#include "mpferro/criticality.hpp"
#include "mpferro/errors.hpp"
#include "mpferro/exactfinite.hpp"
#include "mpferro/genferro.hpp"
#include "mpferro/io.hpp"
#include "mpferro/model.hpp"
#include "mpferro/selfcons.hpp"
#include "mpferro/solver.hpp"
#include "mpferro/spins.hpp"
#include "mpferro/verify.hpp"
