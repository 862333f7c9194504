#pragma once

#include "ratos/analysis.hpp"
#include "ratos/config.hpp"
#include "ratos/error.hpp"
#include "ratos/io.hpp"
#include "ratos/mbsolver.hpp"
#include "ratos/model.hpp"
#include "ratos/polariton.hpp"
#include "ratos/protocols.hpp"
#include "ratos/schedule.hpp"
#include "ratos/units.hpp"
