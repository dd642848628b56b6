#include "tpik/trajectory_log.hpp"

#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "tpik/errors.hpp"

namespace tpik {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s == "inf") {
    out = std::numeric_limits<double>::infinity();
    return true;
  }
  if (s == "-inf") {
    out = -std::numeric_limits<double>::infinity();
    return true;
  }
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

TrajectoryLog::TrajectoryLog(std::size_t joint_count, std::vector<LoggedTask> tasks)
    : joint_count_(joint_count), tasks_(std::move(tasks)) {}

void TrajectoryLog::append(TickRecord record) {
  if (static_cast<std::size_t>(record.q.size()) != joint_count_ ||
      static_cast<std::size_t>(record.qdot.size()) != joint_count_ ||
      record.set_values.size() != tasks_.size()) {
    throw ContractViolation("tick record does not match the log schema");
  }
  rows_.push_back(std::move(record));
}

std::vector<std::string> TrajectoryLog::columns() const {
  std::vector<std::string> cols = {"time", "tick", "phase", "state", "frame"};
  for (std::size_t i = 1; i <= joint_count_; ++i) cols.push_back(fmt::format("q{}", i));
  for (std::size_t i = 1; i <= joint_count_; ++i) cols.push_back(fmt::format("qd{}", i));
  for (const auto& t : tasks_) {
    cols.push_back(t.id);
    cols.push_back(t.id + "_min");
    cols.push_back(t.id + "_max");
  }
  for (const char* c : {"pos_err_x", "pos_err_y", "pos_err_z", "ori_err_x", "ori_err_y",
                        "ori_err_z", "err_norm", "active_mask", "chosen_mask", "candidates",
                        "feasible", "candidate_norms", "scale"}) {
    cols.emplace_back(c);
  }
  return cols;
}

void TrajectoryLog::write_csv(std::ostream& out) const {
  out << fmt::format("{}\n", fmt::join(columns(), ","));
  std::string line;
  for (const auto& r : rows_) {
    line.clear();
    line += fmt::format("{},{},{},{},{}", format_number(r.time), r.tick, r.phase, r.state, r.frame);
    for (Eigen::Index i = 0; i < r.q.size(); ++i) line += "," + format_number(r.q[i]);
    for (Eigen::Index i = 0; i < r.qdot.size(); ++i) line += "," + format_number(r.qdot[i]);
    for (std::size_t t = 0; t < tasks_.size(); ++t) {
      line += "," + format_number(r.set_values[t]) + "," + format_number(tasks_[t].lower) + "," +
              format_number(tasks_[t].upper);
    }
    for (int i = 0; i < 3; ++i) line += "," + format_number(r.position_error[i]);
    for (int i = 0; i < 3; ++i) line += "," + format_number(r.orientation_error[i]);
    line += "," + format_number(r.error_norm);
    line += fmt::format(",{},{},{},{},", r.active_mask, r.chosen_mask, r.candidates, r.feasible);
    for (std::size_t i = 0; i < r.candidate_norms.size(); ++i) {
      if (i) line += ';';
      line += format_number(r.candidate_norms[i]);
    }
    line += "," + format_number(r.scale) + "\n";
    out << line;
  }
}

std::string TrajectoryLog::to_csv() const {
  std::ostringstream out;
  write_csv(out);
  return out.str();
}

void TrajectoryLog::write_bounds_csv(std::ostream& out) const {
  out << "time";
  for (const auto& t : tasks_) {
    out << ',' << t.id << ',' << t.id << "_lower_margin," << t.id << "_upper_margin";
  }
  out << '\n';
  for (const auto& r : rows_) {
    out << format_number(r.time);
    for (std::size_t t = 0; t < tasks_.size(); ++t) {
      const double v = r.set_values[t];
      out << ',' << format_number(v) << ',' << format_number(v - tasks_[t].lower) << ','
          << format_number(tasks_[t].upper - v);
    }
    out << '\n';
  }
}

ExportReport export_plot_data(const std::string& trajectory_csv, const std::string& out_dir) {
  ExportReport report;
  std::ifstream in(trajectory_csv);
  if (!in) throw Error("cannot open trajectory log '" + trajectory_csv + "'");
  std::filesystem::create_directories(out_dir);

  std::string header_line;
  std::vector<std::string> header;
  if (std::getline(in, header_line)) header = split(header_line, ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;

  struct Output {
    std::string path;
    std::vector<std::string> columns;  // source columns, or literal bounds for "@min" style
    std::ofstream stream;
  };
  std::vector<std::unique_ptr<Output>> outputs;
  auto add_output = [&](const std::string& name, const std::vector<std::string>& out_header,
                        std::vector<std::string> sources) {
    auto o = std::make_unique<Output>();
    o->path = (std::filesystem::path(out_dir) / name).string();
    o->columns = std::move(sources);
    o->stream.open(o->path);
    if (!o->stream) throw Error("cannot write '" + o->path + "'");
    o->stream << fmt::format("{}\n", fmt::join(out_header, ","));
    report.files.push_back(o->path);
    outputs.push_back(std::move(o));
  };

  add_output("pose_error.csv",
             {"time", "pos_err_x", "pos_err_y", "pos_err_z", "ori_err_x", "ori_err_y", "ori_err_z"},
             {"time", "pos_err_x", "pos_err_y", "pos_err_z", "ori_err_x", "ori_err_y", "ori_err_z"});

  const std::regex joint_task(R"(joint(\d+)_limit)");
  std::vector<std::string> obstacle_ids;
  for (const auto& name : header) {
    std::smatch m;
    if (std::regex_match(name, m, joint_task)) {
      const std::string k = m[1].str();
      add_output("joint" + k + "_limits.csv", {"time", "q" + k, "lower", "upper"},
                 {"time", name, name + "_min", name + "_max"});
    } else if (name.rfind("obstacle_", 0) == 0 && col.count(name + "_min") &&
               col.count(name + "_max")) {
      obstacle_ids.push_back(name);
    }
  }
  if (!obstacle_ids.empty()) {
    std::vector<std::string> h = {"time"};
    std::vector<std::string> src = {"time"};
    for (const auto& id : obstacle_ids) {
      const std::string obj = id.substr(std::string("obstacle_").size());
      h.push_back(obstacle_ids.size() == 1 ? "distance" : "distance_" + obj);
      h.push_back(obstacle_ids.size() == 1 ? "min_distance" : "min_distance_" + obj);
      src.push_back(id);
      src.push_back(id + "_min");
    }
    add_output("obstacle_distance.csv", h, src);
  }

  for (const auto& o : outputs) {
    for (const auto& c : o->columns) {
      if (!col.count(c)) {
        report.warnings.push_back("column '" + c + "' missing from log");
        report.truncated = true;
      }
    }
  }

  std::string line;
  std::size_t line_no = 1;
  while (!report.truncated && std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    bool ok = fields.size() == header.size();
    for (std::size_t i = 0; ok && i < fields.size(); ++i) {
      if (header[i] == "state" || header[i] == "frame" || header[i] == "candidate_norms") continue;
      double v = 0.0;
      ok = parse_double(fields[i], v);
    }
    if (!ok) {
      report.truncated = true;
      report.warnings.push_back(fmt::format("line {} is incomplete; export stops there", line_no));
      break;
    }
    for (const auto& o : outputs) {
      std::string row;
      for (std::size_t i = 0; i < o->columns.size(); ++i) {
        if (i) row += ',';
        row += fields[col.at(o->columns[i])];
      }
      o->stream << row << '\n';
    }
    ++report.rows;
  }
  if (report.rows == 0) report.warnings.push_back("trajectory log has no data rows");
  return report;
}

}  // namespace tpik
