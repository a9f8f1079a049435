#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "srn/observation.hpp"
#include "srn/reaction_network.hpp"
#include "srn/ssa.hpp"

namespace srn {

/// Shortest round-trip text for a double ("%.17g"), used by all CSV writers
/// so repeated runs produce byte-identical files.
std::string format_double(double v);

/// FNV-1a 64-bit hash; identifies configurations in output-file headers.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

/// Network definition document:
/// {"species": [...], "omega": 1.0,
///  "reactions": [{"reactants": {"Enzyme": 1, ...},
///                 "products": {...}, "param": "theta1"}, ...]}
/// Kinetic constants are ordered by first appearance of their names.
/// Unknown keys are rejected.
ReactionNetwork load_network_json(const std::string& path);
ReactionNetwork parse_network_json(const std::string& text);

/// Dataset document:
/// {"times": [...], "observed": [[3], ...], "batch": 1,
///  "sigma": {"3": 4.0}, "y": [[...], ...]}
/// Species indices are 1-based in the file. An optional "provenance" object
/// carries {"seed", "theta", "config_hash"} for synthetic data.
void save_dataset_json(const Dataset& ds, const std::string& path);
Dataset load_dataset_json(const std::string& path);
std::string dataset_to_json_text(const Dataset& ds);
Dataset parse_dataset_json(const std::string& text);

/// Event-level trajectory export: header comment, then time,x1..xJ rows.
void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          const std::string& header_comment);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace srn
