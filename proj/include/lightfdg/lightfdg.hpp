#pragma once

#include "lightfdg/detection.hpp"
#include "lightfdg/engine.hpp"
#include "lightfdg/errors.hpp"
#include "lightfdg/grooming.hpp"
#include "lightfdg/optics.hpp"
#include "lightfdg/packet.hpp"
#include "lightfdg/provisioning.hpp"
#include "lightfdg/scenario.hpp"
#include "lightfdg/topology.hpp"
#include "lightfdg/traffic.hpp"
#include "lightfdg/types.hpp"
#include "lightfdg/widest_paths.hpp"
