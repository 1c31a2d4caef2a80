#pragma once

#include "ccoh/constants.hpp"
#include "ccoh/error.hpp"
#include "ccoh/model.hpp"
#include "ccoh/quadrature.hpp"
#include "ccoh/acoustics.hpp"
#include "ccoh/rates.hpp"
#include "ccoh/dynamics.hpp"
#include "ccoh/io.hpp"
#include "ccoh/workbench.hpp"
