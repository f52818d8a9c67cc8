#include "vline/frame_json.hpp"

#include <fstream>
#include <sstream>

#include "vline/error.hpp"

namespace vline {

namespace {

Vector normalized(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be an array");
  Vector v;
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be numeric");
    v.push_back(x.get<double>());
  }
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n))
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be a nonzero finite vector");
  for (double& x : v) x /= n;
  return v;
}

Orientation parse_orientation(const std::string& s) {
  if (s == "up") return Orientation::up;
  if (s == "down") return Orientation::down;
  if (s == "left") return Orientation::left;
  if (s == "right") return Orientation::right;
  throw Error(ErrorKind::InvalidArgument, "orientation must be up, down, left or right");
}

Frame frame_from_json_impl(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "frame must be a JSON object");
  if (j.contains("generators")) {
    std::vector<Vector> gens;
    for (const auto& g : j.at("generators")) gens.push_back(normalized(g, "generator"));
    return make_cone_frame_nd(gens);
  }
  ConeFrame2 base;
  if (j.contains("u") || j.contains("v")) {
    if (!j.contains("u") || !j.contains("v"))
      throw Error(ErrorKind::InvalidArgument, "frame needs both u and v");
    base = make_cone_frame(normalized(j.at("u"), "u"), normalized(j.at("v"), "v"));
  } else if (j.contains("beta")) {
    const auto orient = j.value("orientation", std::string("up"));
    base = make_symmetric_frame(j.at("beta").get<double>(), parse_orientation(orient));
  } else {
    throw Error(ErrorKind::InvalidArgument, "frame needs u/v, beta/orientation or generators");
  }
  if (j.contains("c1") || j.contains("c2")) {
    const double c1 = j.value("c1", 1.0);
    const double c2 = j.value("c2", 1.0);
    return solve_weighted_direction(base.u, base.v, c1, c2);
  }
  return base;
}

}  // namespace

Frame frame_from_json(const nlohmann::json& j) {
  try {
    return frame_from_json_impl(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed frame: ") + e.what());
  }
}

nlohmann::json frame_to_json(const Frame& frame) {
  nlohmann::json j;
  if (const auto* f = std::get_if<ConeFrame2>(&frame)) {
    j["u"] = f->u;
    j["v"] = f->v;
  } else if (const auto* w = std::get_if<WeightedFrame2>(&frame)) {
    j["u"] = w->base.u;
    j["v"] = w->base.v;
    j["c1"] = w->c1;
    j["c2"] = w->c2;
  } else {
    j["generators"] = std::get<ConeFrameN>(frame).generators;
  }
  return j;
}

Frame parse_frame_spec(std::string_view text) {
  if (text == "perp" || text == "perpendicular") return perpendicular_frame();
  std::string body(text);
  if (!body.empty() && body.front() == '@') {
    std::ifstream in(body.substr(1));
    if (!in) throw Error(ErrorKind::IoError, "cannot read frame file " + body.substr(1));
    std::stringstream ss;
    ss << in.rdbuf();
    body = ss.str();
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("frame is not valid JSON: ") + e.what());
  }
  return frame_from_json(j);
}

}  // namespace vline
