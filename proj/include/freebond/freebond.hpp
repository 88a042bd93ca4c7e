#pragma once

#include "freebond/cbf.hpp"
#include "freebond/cbf_json.hpp"
#include "freebond/classical.hpp"
#include "freebond/duality.hpp"
#include "freebond/errors.hpp"
#include "freebond/free_semigroup.hpp"
#include "freebond/kendall.hpp"
#include "freebond/quadrature.hpp"
#include "freebond/report_io.hpp"
#include "freebond/rng.hpp"
#include "freebond/special_functions.hpp"
#include "freebond/stable_series.hpp"
