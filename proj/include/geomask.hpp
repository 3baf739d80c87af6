#pragma once

#include "geomask/config.hpp"
#include "geomask/dataset.hpp"
#include "geomask/efficiency.hpp"
#include "geomask/errors.hpp"
#include "geomask/geometry.hpp"
#include "geomask/harness.hpp"
#include "geomask/kde.hpp"
#include "geomask/logit.hpp"
#include "geomask/mask.hpp"
#include "geomask/report.hpp"
#include "geomask/rng.hpp"
#include "geomask/svg.hpp"
#include "geomask/synth.hpp"
