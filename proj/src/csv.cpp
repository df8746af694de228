#include "misspec/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace misspec {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_vec(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fmt(v[i]);
  }
  return out;
}

std::vector<double> split_vec(const std::string& s) {
  std::vector<double> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ';'))
    if (!tok.empty()) out.push_back(std::stod(tok));
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (std::getline(is, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

std::string trajectory_csv(const Environment& env, const Trajectory& traj) {
  std::ostringstream os;
  os << "t,action,consequence";
  for (const auto& a : env.actions) os << ",sigma_" << a;
  os << ",kl_gap,theta_hat,belief_mean\n";
  for (const auto& s : traj.steps) {
    os << s.t << ',' << env.actions[s.action] << ','
       << consequence_to_string(env, s.y);
    for (double w : s.sigma.w) os << ',' << fmt(w);
    os << ',' << fmt(s.kl_gap) << ',' << join_vec(s.theta_hat) << ','
       << join_vec(s.belief_mean) << '\n';
  }
  return os.str();
}

Trajectory parse_trajectory_csv(const Environment& env, const std::string& text) {
  Trajectory traj;
  traj.n_actions = env.n_actions();
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("empty trajectory csv");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::size_t nx = env.n_actions();
    if (cells.size() != 3 + nx + 3)
      throw SchemaError("trajectory csv row has wrong arity");
    TrajectoryStep s;
    s.t = std::stol(cells[0]);
    s.action = env.action_index(cells[1]);
    if (env.truth.kind == ConsequenceKind::Discrete) {
      for (std::size_t y = 0; y < env.truth.support.size(); ++y)
        if (env.truth.support[y] == cells[2]) s.y.label = static_cast<int>(y);
    } else {
      s.y.vec = split_vec(cells[2]);
    }
    std::vector<double> w;
    for (std::size_t x = 0; x < nx; ++x) w.push_back(std::stod(cells[3 + x]));
    s.sigma = ActionDist(w);
    s.kl_gap = std::stod(cells[3 + nx]);
    s.theta_hat = split_vec(cells[4 + nx]);
    s.belief_mean = split_vec(cells[5 + nx]);
    traj.steps.push_back(std::move(s));
  }
  return traj;
}

std::string dipath_csv(const Environment& env, const DIPath& path) {
  std::ostringstream os;
  os << "time";
  for (const auto& a : env.actions) os << ",sigma_" << a;
  os << ",event,selection\n";
  std::size_t ev = 0;
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    os << fmt(path.times[i]);
    for (double w : path.states[i].w) os << ',' << fmt(w);
    // mark states that land on an event time
    std::string event, selection;
    while (ev < path.events.size() && path.events[ev].time < path.times[i] - 1e-15)
      ++ev;
    if (ev < path.events.size() &&
        std::abs(path.events[ev].time - path.times[i]) <= 1e-15) {
      event = path.events[ev].boundary;
      selection = path.events[ev].selection;
      ++ev;
    }
    os << ',' << event << ',' << selection << '\n';
  }
  return os.str();
}

DIPath parse_dipath_csv(const Environment& env, const std::string& text) {
  DIPath path;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("empty dipath csv");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::size_t nx = env.n_actions();
    if (cells.size() < 1 + nx + 2) throw SchemaError("dipath csv row has wrong arity");
    path.times.push_back(std::stod(cells[0]));
    std::vector<double> w;
    for (std::size_t x = 0; x < nx; ++x) w.push_back(std::stod(cells[1 + x]));
    path.states.emplace_back(std::move(w));
    if (!cells[1 + nx].empty())
      path.events.push_back({path.times.back(), cells[1 + nx], cells[2 + nx]});
  }
  return path;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << content;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace misspec
