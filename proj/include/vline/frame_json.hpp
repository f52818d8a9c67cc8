#pragma once

#include <string_view>

#include "json.hpp"
#include "vline/geometry.hpp"

namespace vline {

// Accepted forms:
//   {"u":[ux,uy],"v":[vx,vy]}                     two-ray frame
//   {"beta":b,"orientation":"up|down|left|right"}  symmetric two-ray frame
//   either of the above plus {"c1":..,"c2":..}     weighted frame
//   {"generators":[[...],...]}                    polyhedral frame
// Generators are normalized on input.
Frame frame_from_json(const nlohmann::json& json);
// Always emits the explicit u/v (or generators) form.
nlohmann::json frame_to_json(const Frame& frame);

// "perp" (or "perpendicular"), an inline JSON object, or "@path" naming a
// JSON file.
Frame parse_frame_spec(std::string_view text);

}  // namespace vline
