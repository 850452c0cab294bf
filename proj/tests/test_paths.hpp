#pragma once

#include <string>

#ifndef SPIKEFORGE_FIXTURE_DIR
#error "SPIKEFORGE_FIXTURE_DIR must point at the fixtures directory"
#endif

inline std::string fixture_path(const std::string& name) { return std::string(SPIKEFORGE_FIXTURE_DIR) + "/" + name; }
