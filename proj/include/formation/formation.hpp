// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "formation/numerics.hpp"
#include "formation/plant.hpp"
#include "formation/control.hpp"
#include "formation/estimation.hpp"
#include "formation/channel.hpp"
#include "formation/precoding.hpp"
#include "formation/trigger.hpp"
#include "formation/config.hpp"
#include "formation/harness.hpp"
#include "formation/io.hpp"
