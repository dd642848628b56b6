#pragma once

// Small helpers shared by the YAML config loaders. Every failure is reported
// as a ConfigError carrying the file name and the 1-based line of the node.

#include <yaml-cpp/yaml.h>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <string>

#include "tpik/errors.hpp"

namespace tpik::detail {

inline int line_of(const YAML::Node& node) {
  return node.Mark().line >= 0 ? node.Mark().line + 1 : 0;
}

inline YAML::Node load_yaml_file(const std::string& path) {
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError(path, 0, "cannot open file");
  } catch (const YAML::ParserException& e) {
    throw ConfigError(path, e.mark.line + 1, e.msg);
  }
}

inline YAML::Node load_yaml_string(const std::string& text, const std::string& name) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(name, e.mark.line + 1, e.msg);
  }
}

class YamlReader {
 public:
  explicit YamlReader(std::string file) : file_(std::move(file)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    throw ConfigError(file_, line_of(node), what);
  }

  YAML::Node require(const YAML::Node& parent, const std::string& key) const {
    if (!parent.IsMap()) fail(parent, "expected a mapping containing '" + key + "'");
    YAML::Node child = parent[key];
    if (!child) fail(parent, "missing key '" + key + "'");
    return child;
  }

  template <typename T>
  T as(const YAML::Node& node, const std::string& what) const {
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "invalid value for " + what);
    }
  }

  template <typename T>
  T get(const YAML::Node& parent, const std::string& key) const {
    return as<T>(require(parent, key), key);
  }

  template <typename T>
  T get_or(const YAML::Node& parent, const std::string& key, T fallback) const {
    if (!parent.IsMap() || !parent[key]) return fallback;
    return as<T>(parent[key], key);
  }

  Eigen::Vector3d vec3(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence() || node.size() != 3) fail(node, what + " must be a 3-element list");
    return {as<double>(node[0], what), as<double>(node[1], what), as<double>(node[2], what)};
  }

  /// [w, x, y, z], must already be unit length within `tol`.
  Eigen::Quaterniond quat(const YAML::Node& node, const std::string& what,
                          double tol) const {
    if (!node.IsSequence() || node.size() != 4) {
      fail(node, what + " must be a 4-element list [w, x, y, z]");
    }
    Eigen::Quaterniond q(as<double>(node[0], what), as<double>(node[1], what),
                         as<double>(node[2], what), as<double>(node[3], what));
    if (std::abs(q.norm() - 1.0) > tol) fail(node, what + " is not a unit quaternion");
    return q;
  }

  /// {translation: [x,y,z], quaternion: [w,x,y,z]}; both keys optional.
  Eigen::Isometry3d transform(const YAML::Node& node, const std::string& what,
                              double tol) const {
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    if (!node || node.IsNull()) return t;
    if (!node.IsMap()) fail(node, what + " must be a mapping");
    if (node["translation"]) t.translation() = vec3(node["translation"], what + ".translation");
    if (node["quaternion"]) {
      t.linear() = quat(node["quaternion"], what + ".quaternion", tol).toRotationMatrix();
    }
    return t;
  }

  const std::string& file() const { return file_; }

 private:
  std::string file_;
};

}  // namespace tpik::detail
