#pragma once

#include "lipforge/real.hpp"
#include "lipforge/space.hpp"
#include "lipforge/sampling.hpp"
#include "lipforge/patch_index.hpp"
#include "lipforge/lipfun.hpp"
#include "lipforge/metric.hpp"
#include "lipforge/serialize.hpp"
#include "lipforge/nets.hpp"
#include "lipforge/perturb.hpp"
#include "lipforge/game.hpp"
#include "lipforge/transcript.hpp"
#include "lipforge/probe.hpp"
#include "lipforge/parallel.hpp"
#include "lipforge/verify.hpp"
#include "lipforge/config.hpp"
