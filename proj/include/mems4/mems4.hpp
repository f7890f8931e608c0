#pragma once

#include "mems4/band_linalg.hpp"
#include "mems4/bessel.hpp"
#include "mems4/closed_form.hpp"
#include "mems4/error.hpp"
#include "mems4/evolution.hpp"
#include "mems4/io.hpp"
#include "mems4/model.hpp"
#include "mems4/radial.hpp"
#include "mems4/stationary.hpp"
#include "mems4/validate.hpp"
