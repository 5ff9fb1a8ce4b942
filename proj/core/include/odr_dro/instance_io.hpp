#pragma once

#include <string>

#include "odr_dro/model.hpp"

namespace odr {

// JSON layout (version 1):
//   {"format": "odr-dro-instance", "version": 1, "label": str,
//    "dims": {"m", "n", "k", "l", "tau"},
//    "mu": [m], "sigma": [[m]], "gamma1": num, "gamma2": num,
//    "support": {"a": [[m]] x l, "b": [l]},
//    "pieces": [{"w": [[n]] x m, "d": [m], "w0": [n], "d0": num}],
//    "decisions": {"lmi": [[[tau]] x tau] x (n + 1), "eq_a": [[n]], "eq_b": [r]}}
// Doubles are written in shortest round-trip form, so text -> instance ->
// text is byte-stable.
std::string instance_to_json(const DroInstance& instance);
DroInstance instance_from_json(const std::string& text);

void save_instance(const DroInstance& instance, const std::string& path);
DroInstance load_instance(const std::string& path);

}  // namespace odr
