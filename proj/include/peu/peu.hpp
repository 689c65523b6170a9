#pragma once

#include "peu/adversary.hpp"
#include "peu/error.hpp"
#include "peu/flemma.hpp"
#include "peu/lti.hpp"
#include "peu/numkit.hpp"
#include "peu/random.hpp"
#include "peu/signals.hpp"
#include "peu/universality.hpp"
