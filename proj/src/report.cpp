#include "duality/report.hpp"

#include <cmath>
#include <cstdio>

namespace duality {

Estimate summarize(const std::string& name, const std::vector<double>& values) {
  Estimate e{name, 0.0, 0.0};
  const std::size_t n = values.size();
  if (n == 0) return e;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  e.mean = mean;
  e.se = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n)) : 0.0;
  return e;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void dump_rec(const OrderedJson& j, int indent, int depth, std::string& out) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string pad_close = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case OrderedJson::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad;
        out += OrderedJson(it.key()).dump();
        out += indent > 0 ? ": " : ":";
        dump_rec(it.value(), indent, depth + 1, out);
      }
      out += nl;
      out += pad_close;
      out += "}";
      return;
    }
    case OrderedJson::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool scalars = true;
      for (const auto& v : j) scalars = scalars && !v.is_structured();
      out += "[";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += scalars || indent == 0 ? (indent > 0 ? ", " : ",") : ",";
        if (!scalars) {
          out += nl;
          out += pad;
        }
        first = false;
        dump_rec(v, indent, depth + 1, out);
      }
      if (!scalars) {
        out += nl;
        out += pad_close;
      }
      out += "]";
      return;
    }
    case OrderedJson::value_t::number_float:
      if (std::isfinite(j.get<double>())) {
        out += format_double(j.get<double>());
      } else {
        out += "null";
      }
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string dump_json(const OrderedJson& j, int indent) {
  std::string out;
  dump_rec(j, indent, 0, out);
  out += "\n";
  return out;
}

OrderedJson SimulationReport::to_json(bool include_elapsed) const {
  OrderedJson j;
  j["experiment"] = experiment;
  j["replicas"] = replicas;
  j["seed"] = seed;
  OrderedJson est = OrderedJson::array();
  for (const auto& e : estimates) {
    OrderedJson row;
    row["name"] = e.name;
    row["mean"] = e.mean;
    row["se"] = e.se;
    est.push_back(row);
  }
  j["estimates"] = est;
  j["criterion"] = criterion;
  j["pass"] = pass;
  j["details"] = details;
  if (include_elapsed) j["elapsed_seconds"] = elapsed_seconds;
  return j;
}

std::string SimulationReport::to_csv() const {
  std::string out = "name,mean,se\n";
  for (const auto& e : estimates) {
    out += e.name;
    out += ",";
    out += format_double(e.mean);
    out += ",";
    out += format_double(e.se);
    out += "\n";
  }
  return out;
}

}  // namespace duality
