#pragma once

// MATPOWER v2 case ingestion: text -> RawCase -> per-unit NetworkModel.

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ivpf/network.hpp"

namespace ivpf {

enum class CaseErrc {
  Io,
  MissingSection,
  MalformedRow,
  NonNumericToken,
  InvalidValue,
  NoSlack,
  MultipleSlack,
  DuplicateBusId,
  ConflictingVset,
  BranchToUnknownBus,
  GenAtUnknownBus,
  PolyLoadFormat,
};

const char* to_string(CaseErrc code);

class CaseError : public std::runtime_error {
 public:
  CaseError(CaseErrc code, const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), code_(code), line_(line) {}

  CaseErrc code() const noexcept { return code_; }
  // 1-based source line, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  CaseErrc code_;
  std::size_t line_;
};

struct RawBusRow {
  int id = 0;
  int type = 1;  // 1 PQ, 2 PV, 3 slack
  double pd = 0, qd = 0;  // MW, MVAr
  double gs = 0, bs = 0;  // MW, MVAr at 1 pu
  double vm = 1, va = 0;  // pu, degrees
  double base_kv = 0;

  bool operator==(const RawBusRow&) const = default;
};

struct RawGenRow {
  int bus = 0;
  double pg = 0, qg = 0;  // MW, MVAr
  double vg = 1;          // pu
  double status = 1;

  bool operator==(const RawGenRow&) const = default;
};

struct RawBranchRow {
  int from = 0, to = 0;
  double r = 0, x = 0, b = 0;  // pu
  double ratio = 0;            // 0 means nominal
  double angle = 0;            // degrees
  double status = 1;

  bool operator==(const RawBranchRow&) const = default;
};

struct RawCase {
  double base_mva = 100;
  std::vector<RawBusRow> bus_rows;
  std::vector<RawGenRow> gen_rows;
  std::vector<RawBranchRow> branch_rows;

  bool operator==(const RawCase&) const = default;
};

RawCase parse_matpower(std::string_view text);
RawCase read_matpower_file(const std::filesystem::path& path);

// Emits a MATPOWER v2 function body that parse_matpower reads back exactly.
// Columns not carried by RawCase are written with neutral defaults.
std::string write_matpower(const RawCase& raw, std::string_view name = "case");

NetworkModel build_network(const RawCase& raw);

// Scales every non-slack bus load and every PV generator's real power.
NetworkModel apply_loading(const NetworkModel& net, double lambda);

// Sidecar JSON: [{"bus": <case bus id>, "gR": [6], "gI": [6]}, ...] in pu.
std::vector<PolyLoad> parse_poly_loads(std::string_view json_text, const NetworkModel& net);
NetworkModel with_poly_loads(NetworkModel net, const std::filesystem::path& sidecar);

}  // namespace ivpf
