#pragma once

#include "errors.hpp"
#include "model.hpp"
#include "grid.hpp"
#include "kpp.hpp"
#include "sandwich.hpp"
#include "profile.hpp"
#include "align.hpp"
#include "wave.hpp"
#include "analysis.hpp"
#include "pde.hpp"
#include "io.hpp"
