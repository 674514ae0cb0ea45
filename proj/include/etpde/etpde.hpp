#pragma once

#include "etpde/types.hpp"
#include "etpde/linalg.hpp"
#include "etpde/spectral_model.hpp"
#include "etpde/feedback_design.hpp"
#include "etpde/nonlinearity.hpp"
#include "etpde/certificates.hpp"
#include "etpde/simulator.hpp"
#include "etpde/lyapunov.hpp"
#include "etpde/event_trigger.hpp"
