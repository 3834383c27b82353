#pragma once

#include "psifield/analysis.hpp"
#include "psifield/grid.hpp"
#include "psifield/guidance.hpp"
#include "psifield/histogram.hpp"
#include "psifield/langevin.hpp"
#include "psifield/rng.hpp"
#include "psifield/schrodinger.hpp"
#include "psifield/smoluchowski.hpp"
#include "psifield/snapshot_io.hpp"
