// Convenience umbrella header.

#pragma once

#include "maps.hpp"
#include "models.hpp"
#include "net.hpp"
#include "report.hpp"
#include "train.hpp"
#include "uncertainty.hpp"
