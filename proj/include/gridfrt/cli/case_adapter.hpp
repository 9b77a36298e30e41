#pragma once

// Plain-text test-case reader and the adaptation to the grid model: generator
// buses become NormalForm (presets drawn from the synthesis mix), everything
// else stays PQ, line admittances come from the standard 380 kV line type
// with the case's own lengths.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gridfrt/core_model.hpp"
#include "gridfrt/synthesis.hpp"

namespace gridfrt::cli {

enum class CaseBusType { Gen, Load, Sync, Slack };

struct CaseBus {
  int id = 0;
  CaseBusType type = CaseBusType::Load;
  double pd_mw = 0.0;
  double qd_mvar = 0.0;
  double pg_mw = 0.0;
};

struct CaseBranch {
  int from = 0;
  int to = 0;
  double length_mi = 0.0;
  bool transformer = false;
};

struct TestCase {
  std::vector<CaseBus> buses;
  std::vector<CaseBranch> branches;
};

/// Throws GridError with the line number on malformed input.
TestCase parse_case(std::istream& is, const std::string& source = "<case>");
TestCase read_case(const std::filesystem::path& path);

inline constexpr double kKmPerMile = 1.609344;

struct AdaptedCase {
  Grid grid;
  OperatingPoint op;
  std::vector<int> original_ids;  // by dense bus index
};

/// Buses are renumbered densely in ascending original id. NormalForm p_set is
/// (Pg - Pd) / S_base, PQ loads take -(Pd + j Qd) / S_base, transformers get
/// an equivalent line of transformer_length_km. The dispatch from a load flow
/// is applied. Throws GridError for inconsistent cases and NumericalError when
/// the load flow fails.
AdaptedCase adapt_case(const TestCase& tc, const synthesis::SynthesisConfig& cfg, double transformer_length_km,
                       std::uint64_t seed);

}  // namespace gridfrt::cli
