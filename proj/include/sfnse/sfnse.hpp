#pragma once

#include "sfnse/diagnostics.hpp"
#include "sfnse/dynamics.hpp"
#include "sfnse/errors.hpp"
#include "sfnse/experiments.hpp"
#include "sfnse/io.hpp"
#include "sfnse/noise.hpp"
#include "sfnse/params.hpp"
#include "sfnse/selftest.hpp"
#include "sfnse/spectral.hpp"
