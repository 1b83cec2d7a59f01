#pragma once

#include "mimostab/analysis.hpp"
#include "mimostab/codesign.hpp"
#include "mimostab/cyclic.hpp"
#include "mimostab/design.hpp"
#include "mimostab/error.hpp"
#include "mimostab/majorize.hpp"
#include "mimostab/numerics.hpp"
#include "mimostab/plant.hpp"
