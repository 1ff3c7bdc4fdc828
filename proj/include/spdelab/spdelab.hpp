#pragma once

#include "errors.hpp"
#include "random.hpp"
#include "parallel.hpp"
#include "statistics.hpp"
#include "hilbert.hpp"
#include "gdc_cert.hpp"
#include "noise.hpp"
#include "sde_engine.hpp"
#include "wasserstein.hpp"
#include "ou_levy.hpp"
#include "hjmm.hpp"
#include "convergence_lab.hpp"
#include "scenario_file.hpp"
#include "output.hpp"
#include "cli.hpp"
