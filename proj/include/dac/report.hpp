#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dac/error.hpp"
#include "dac/trainer.hpp"

namespace dac {

// Shortest text that round-trips the double exactly.
inline std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  double back = 0.0;
  std::sscanf(buf, "%lg", &back);
  if (back == x) {
    for (int prec = 1; prec <= 16; ++prec) {
      char shorter[32];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
      std::sscanf(shorter, "%lg", &back);
      if (back == x) return shorter;
    }
  }
  return buf;
}

inline constexpr const char* kTraceCsvHeader =
    "run_id,seed,iteration,agent_id,mean_return,stderr_return,"
    "disagreement_norm";

// One row per (evaluation iteration, agent).
inline std::string trace_csv(const TrainTrace& trace, long run_id,
                             std::uint64_t seed) {
  std::ostringstream out;
  out << kTraceCsvHeader << "\n";
  for (const EvalLogRow& row : trace.eval_log) {
    for (std::size_t agent = 0; agent < row.mean_return.size(); ++agent) {
      out << run_id << ',' << seed << ',' << row.actor_update << ',' << agent
          << ',' << fmt_double(row.mean_return[agent]) << ','
          << fmt_double(row.stderr_return[agent]) << ','
          << fmt_double(row.disagreement) << "\n";
    }
  }
  return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << content;
}

struct CurvePoint {
  long iteration = 0;
  int agent = 0;
  double mean_return = 0.0;
  double var_return = 0.0;
  double mean_disagreement = 0.0;
};

// Cross-trial mean and population variance per (iteration, agent). Traces
// must share the evaluation grid; values are sorted before accumulation so
// the result does not depend on the trace order.
inline std::vector<CurvePoint> assemble_curves(
    const std::vector<TrainTrace>& traces) {
  require(!traces.empty(), "assemble_curves: no traces");
  const TrainTrace& first = traces.front();
  for (const TrainTrace& t : traces) {
    if (t.eval_log.size() != first.eval_log.size())
      throw ContractViolation("assemble_curves: mismatched iteration grids");
    for (std::size_t r = 0; r < t.eval_log.size(); ++r) {
      if (t.eval_log[r].actor_update != first.eval_log[r].actor_update ||
          t.eval_log[r].mean_return.size() !=
              first.eval_log[r].mean_return.size())
        throw ContractViolation("assemble_curves: mismatched iteration grids");
    }
  }

  std::vector<CurvePoint> points;
  for (std::size_t r = 0; r < first.eval_log.size(); ++r) {
    const std::size_t n_agents = first.eval_log[r].mean_return.size();
    std::vector<double> dis;
    for (const TrainTrace& t : traces) dis.push_back(t.eval_log[r].disagreement);
    std::sort(dis.begin(), dis.end());
    double dis_mean = 0.0;
    for (double d : dis) dis_mean += d;
    dis_mean /= dis.size();
    for (std::size_t agent = 0; agent < n_agents; ++agent) {
      std::vector<double> vals;
      for (const TrainTrace& t : traces)
        vals.push_back(t.eval_log[r].mean_return[agent]);
      std::sort(vals.begin(), vals.end());
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= vals.size();
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      var /= vals.size();
      points.push_back(CurvePoint{first.eval_log[r].actor_update,
                                  static_cast<int>(agent), mean, var,
                                  dis_mean});
    }
  }
  return points;
}

inline std::string curves_csv(const std::vector<CurvePoint>& points) {
  std::ostringstream out;
  out << "iteration,agent_id,mean_return,var_return,mean_disagreement\n";
  for (const CurvePoint& p : points)
    out << p.iteration << ',' << p.agent << ',' << fmt_double(p.mean_return)
        << ',' << fmt_double(p.var_return) << ','
        << fmt_double(p.mean_disagreement) << "\n";
  return out.str();
}

}  // namespace dac
