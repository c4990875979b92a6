#pragma once

#include "apflow/eos.hpp"
#include "apflow/state.hpp"
#include "apflow/mesh.hpp"
#include "apflow/flux.hpp"
#include "apflow/pressure_solver.hpp"
#include "apflow/stepper.hpp"
#include "apflow/riemann.hpp"
#include "apflow/cases.hpp"
#include "apflow/diagnostics.hpp"
#include "apflow/io.hpp"
#include "apflow/driver.hpp"
#include "apflow/manifest.hpp"
