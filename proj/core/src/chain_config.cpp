#include "tpik/chain_config.hpp"

#include "tpik/errors.hpp"
#include "yaml_util.hpp"

namespace tpik {

namespace {

constexpr double kQuatTolerance = 1e-12;

constexpr const char* kReferenceChainYaml = R"yaml(
# Reference 7-DOF arm. Pitch joints carry a half-turn offset so that
# q = pi is the straight configuration.
joints:
  - axis: [0, 0, 1]
    offset: {translation: [0, 0, 0.20]}
  - axis: [1, 0, 0]
    offset: {quaternion: [0, 1, 0, 0]}
  - axis: [0, 0, 1]
    offset: {translation: [0, 0, 0.20]}
  - axis: [1, 0, 0]
    offset: {translation: [0, 0, 0.20], quaternion: [0, 1, 0, 0]}
  - axis: [0, 0, 1]
    offset: {translation: [0, 0, 0.18]}
  - axis: [1, 0, 0]
    offset: {translation: [0, 0, 0.17], quaternion: [0, 1, 0, 0]}
  - axis: [0, 0, 1]
    offset: {translation: [0, 0, 0.05]}
tool:
  translation: [0, 0, 0.10]
)yaml";

KinematicChain chain_from_node(const YAML::Node& root, const detail::YamlReader& r) {
  const YAML::Node joints = r.require(root, "joints");
  if (!joints.IsSequence() || joints.size() == 0) {
    r.fail(joints, "'joints' must be a non-empty list");
  }
  std::vector<RevoluteJoint> out;
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const YAML::Node j = joints[i];
    const std::string what = "joints[" + std::to_string(i) + "]";
    RevoluteJoint joint;
    joint.axis = r.vec3(r.require(j, "axis"), what + ".axis");
    if (std::abs(joint.axis.norm() - 1.0) > 1e-12) r.fail(j, what + ".axis is not unit length");
    joint.offset = r.transform(j["offset"], what + ".offset", kQuatTolerance);
    out.push_back(joint);
  }
  const Transform tool = r.transform(root["tool"], "tool", kQuatTolerance);
  return KinematicChain(std::move(out), tool);
}

}  // namespace

KinematicChain parse_chain(const std::string& yaml_text, const std::string& source_name) {
  const detail::YamlReader reader(source_name);
  return chain_from_node(detail::load_yaml_string(yaml_text, source_name), reader);
}

KinematicChain load_chain(const std::string& path) {
  const detail::YamlReader reader(path);
  return chain_from_node(detail::load_yaml_file(path), reader);
}

KinematicChain reference_chain() {
  return parse_chain(kReferenceChainYaml, "<reference chain>");
}

}  // namespace tpik
