#pragma once

#include "gamc/bands.hpp"
#include "gamc/config.hpp"
#include "gamc/error.hpp"
#include "gamc/frames.hpp"
#include "gamc/gbt.hpp"
#include "gamc/graphify.hpp"
#include "gamc/lnt.hpp"
#include "gamc/pipeline.hpp"
#include "gamc/router.hpp"
#include "gamc/statfeat.hpp"
