#pragma once

// Convenience umbrella header.
#include "pwstpc/account.hpp"
#include "pwstpc/builders.hpp"
#include "pwstpc/circuit.hpp"
#include "pwstpc/encode.hpp"
#include "pwstpc/expr.hpp"
#include "pwstpc/garble.hpp"
#include "pwstpc/json_io.hpp"
#include "pwstpc/ot.hpp"
#include "pwstpc/paillier.hpp"
#include "pwstpc/partition.hpp"
#include "pwstpc/protocol.hpp"
#include "pwstpc/quantize.hpp"
#include "pwstpc/transport.hpp"
