#pragma once

#include "andna/netsim.hpp"

namespace andna {

// Runs one scheduled scenario command against the simulation.
void execute_command(SimState& s, const Command& cmd);

}  // namespace andna
