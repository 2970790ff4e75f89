#pragma once

#include "ulp/channel.hpp"
#include "ulp/error.hpp"
#include "ulp/ftb.hpp"
#include "ulp/gf256.hpp"
#include "ulp/importance.hpp"
#include "ulp/packet.hpp"
#include "ulp/plan.hpp"
#include "ulp/plan_json.hpp"
#include "ulp/receiver.hpp"
#include "ulp/rs.hpp"
#include "ulp/tensor.hpp"
#include "ulp/harness.hpp"
