#pragma once

#include "spikeforge/tensor.hpp"
#include "spikeforge/network.hpp"
#include "spikeforge/io.hpp"
#include "spikeforge/neurons.hpp"
#include "spikeforge/spiking.hpp"
#include "spikeforge/equivalence.hpp"
#include "spikeforge/bayes_opt.hpp"
#include "spikeforge/converter.hpp"
#include "spikeforge/energy.hpp"
