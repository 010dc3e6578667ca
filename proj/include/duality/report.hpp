#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace duality {

using OrderedJson = nlohmann::ordered_json;

struct Estimate {
  std::string name;
  double mean = 0.0;
  double se = 0.0;
};

/// Sample mean and SE = sample-std / sqrt(n).
Estimate summarize(const std::string& name, const std::vector<double>& values);

/// Monte Carlo outcome. Key order of the serialized form is fixed.
struct SimulationReport {
  std::string experiment;
  std::vector<Estimate> estimates;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  bool pass = false;
  std::string criterion;   // pass rule, verbatim
  OrderedJson details = OrderedJson::object();
  double elapsed_seconds = 0.0;

  /// Elapsed time is left out unless requested so reports stay byte-identical.
  OrderedJson to_json(bool include_elapsed = false) const;
  /// Long format: name,mean,se
  std::string to_csv() const;
};

/// JSON text with every floating-point number printed with 17 significant digits.
std::string dump_json(const OrderedJson& j, int indent = 2);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace duality
