#pragma once

#include "qanneal/dynamics.hpp"
#include "qanneal/ensemble.hpp"
#include "qanneal/errors.hpp"
#include "qanneal/harness.hpp"
#include "qanneal/instance.hpp"
#include "qanneal/operators.hpp"
#include "qanneal/rng.hpp"
#include "qanneal/spectrum.hpp"
#include "qanneal/version.hpp"
