#include "ivpf/case_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ivpf {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kVsetAgreement = 1e-6;

[[noreturn]] void fail(CaseErrc code, const std::string& msg, std::size_t line = 0) {
  std::string what = to_string(code);
  if (line != 0) what += " (line " + std::to_string(line) + ")";
  what += ": " + msg;
  throw CaseError(code, what, line);
}

// Case text with comments blanked out; newline positions kept so offsets map
// back to source lines.
class CaseText {
 public:
  explicit CaseText(std::string_view text) : text_(text) {
    bool in_comment = false;
    for (char& c : text_) {
      if (c == '\n') {
        in_comment = false;
      } else if (c == '%') {
        in_comment = true;
      }
      if (in_comment) c = ' ';
    }
    for (std::size_t i = 0; i < text_.size(); ++i) {
      if (text_[i] == '\n') newlines_.push_back(i);
    }
  }

  std::string_view view() const { return text_; }

  std::size_t line_of(std::size_t offset) const {
    return 1 + static_cast<std::size_t>(std::lower_bound(newlines_.begin(), newlines_.end(), offset) -
                                        newlines_.begin());
  }

 private:
  std::string text_;
  std::vector<std::size_t> newlines_;
};

struct Token {
  std::string_view text;
  std::size_t line;
};

using Row = std::vector<Token>;

bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::size_t skip_ws(std::string_view s, std::size_t pos) {
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  return pos;
}

double to_number(const Token& tok) {
  double value = 0.0;
  const char* first = tok.text.data();
  const char* last = first + tok.text.size();
  if (!tok.text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    fail(CaseErrc::NonNumericToken, "'" + std::string(tok.text) + "' is not a number", tok.line);
  }
  return value;
}

int to_id(const Token& tok) {
  const double v = to_number(tok);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    fail(CaseErrc::MalformedRow, "bus id '" + std::string(tok.text) + "' is not an integer", tok.line);
  }
  return static_cast<int>(v);
}

// Splits the body of a [ ... ] matrix into rows on ';' or newline.
std::vector<Row> split_matrix(const CaseText& src, std::size_t begin, std::size_t end) {
  std::vector<Row> rows;
  Row current;
  const std::string_view s = src.view();
  std::size_t pos = begin;
  while (pos < end) {
    const char c = s[pos];
    if (c == ';' || c == '\n') {
      if (!current.empty()) rows.push_back(std::move(current));
      current.clear();
      ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++pos;
    } else {
      std::size_t stop = pos;
      while (stop < end && !std::isspace(static_cast<unsigned char>(s[stop])) && s[stop] != ',' &&
             s[stop] != ';') {
        ++stop;
      }
      current.push_back({s.substr(pos, stop - pos), src.line_of(pos)});
      pos = stop;
    }
  }
  if (!current.empty()) rows.push_back(std::move(current));
  return rows;
}

std::size_t matching_close(std::string_view s, std::size_t open, std::size_t line) {
  const char open_c = s[open];
  const char close_c = open_c == '[' ? ']' : '}';
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == open_c) ++depth;
    if (s[i] == close_c && --depth == 0) return i;
  }
  fail(CaseErrc::MalformedRow, std::string("unterminated '") + open_c + "'", line);
}

void require_columns(const Row& row, std::size_t n, const char* matrix) {
  if (row.size() < n) {
    fail(CaseErrc::MalformedRow,
         std::string(matrix) + " row has " + std::to_string(row.size()) + " columns, need at least " +
             std::to_string(n),
         row.front().line);
  }
}

RawBusRow to_bus_row(const Row& row) {
  require_columns(row, 10, "bus");
  RawBusRow out;
  out.id = to_id(row[0]);
  const double type = to_number(row[1]);
  if (type != 1 && type != 2 && type != 3) {
    fail(CaseErrc::MalformedRow, "bus type code must be 1, 2 or 3", row[1].line);
  }
  out.type = static_cast<int>(type);
  out.pd = to_number(row[2]);
  out.qd = to_number(row[3]);
  out.gs = to_number(row[4]);
  out.bs = to_number(row[5]);
  out.vm = to_number(row[7]);
  out.va = to_number(row[8]);
  out.base_kv = to_number(row[9]);
  return out;
}

RawGenRow to_gen_row(const Row& row) {
  require_columns(row, 8, "gen");
  RawGenRow out;
  out.bus = to_id(row[0]);
  out.pg = to_number(row[1]);
  out.qg = to_number(row[2]);
  out.vg = to_number(row[5]);
  out.status = to_number(row[7]);
  return out;
}

RawBranchRow to_branch_row(const Row& row) {
  require_columns(row, 11, "branch");
  RawBranchRow out;
  out.from = to_id(row[0]);
  out.to = to_id(row[1]);
  out.r = to_number(row[2]);
  out.x = to_number(row[3]);
  out.b = to_number(row[4]);
  out.ratio = to_number(row[8]);
  out.angle = to_number(row[9]);
  out.status = to_number(row[10]);
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

const char* to_string(CaseErrc code) {
  switch (code) {
    case CaseErrc::Io: return "Io";
    case CaseErrc::MissingSection: return "MissingSection";
    case CaseErrc::MalformedRow: return "MalformedRow";
    case CaseErrc::NonNumericToken: return "NonNumericToken";
    case CaseErrc::InvalidValue: return "InvalidValue";
    case CaseErrc::NoSlack: return "NoSlack";
    case CaseErrc::MultipleSlack: return "MultipleSlack";
    case CaseErrc::DuplicateBusId: return "DuplicateBusId";
    case CaseErrc::ConflictingVset: return "ConflictingVset";
    case CaseErrc::BranchToUnknownBus: return "BranchToUnknownBus";
    case CaseErrc::GenAtUnknownBus: return "GenAtUnknownBus";
    case CaseErrc::PolyLoadFormat: return "PolyLoadFormat";
  }
  return "CaseError";
}

std::size_t NetworkModel::slack_bus() const {
  for (const Bus& b : buses) {
    if (b.kind == BusKind::Slack) return b.index;
  }
  throw CaseError(CaseErrc::NoSlack, "NoSlack: network has no slack bus");
}

RawCase parse_matpower(std::string_view text) {
  const CaseText src(text);
  const std::string_view s = src.view();

  RawCase raw;
  bool have_base = false, have_bus = false, have_gen = false, have_branch = false;

  std::size_t pos = 0;
  while ((pos = s.find("mpc.", pos)) != std::string_view::npos) {
    if (pos > 0 && is_ident(s[pos - 1])) {
      pos += 4;
      continue;
    }
    std::size_t name_end = pos + 4;
    while (name_end < s.size() && is_ident(s[name_end])) ++name_end;
    const std::string_view name = s.substr(pos + 4, name_end - pos - 4);
    const std::size_t line = src.line_of(pos);
    std::size_t cursor = skip_ws(s, name_end);
    if (cursor >= s.size() || s[cursor] != '=') {
      pos = name_end;
      continue;
    }
    cursor = skip_ws(s, cursor + 1);

    if (name == "baseMVA") {
      std::size_t stop = cursor;
      while (stop < s.size() && s[stop] != ';' && s[stop] != '\n') ++stop;
      std::string_view num = s.substr(cursor, stop - cursor);
      while (!num.empty() && std::isspace(static_cast<unsigned char>(num.back()))) num.remove_suffix(1);
      raw.base_mva = to_number({num, line});
      if (!(raw.base_mva > 0)) fail(CaseErrc::InvalidValue, "baseMVA must be positive", line);
      have_base = true;
      pos = stop;
      continue;
    }

    if (cursor < s.size() && (s[cursor] == '[' || s[cursor] == '{')) {
      const std::size_t close = matching_close(s, cursor, line);
      if (s[cursor] == '[' && (name == "bus" || name == "gen" || name == "branch")) {
        const auto rows = split_matrix(src, cursor + 1, close);
        if (name == "bus") {
          for (const Row& r : rows) raw.bus_rows.push_back(to_bus_row(r));
          have_bus = true;
        } else if (name == "gen") {
          for (const Row& r : rows) raw.gen_rows.push_back(to_gen_row(r));
          have_gen = true;
        } else {
          for (const Row& r : rows) raw.branch_rows.push_back(to_branch_row(r));
          have_branch = true;
        }
      }
      pos = close + 1;
    } else {
      pos = cursor;
    }
  }

  if (!have_base) fail(CaseErrc::MissingSection, "baseMVA");
  if (!have_bus) fail(CaseErrc::MissingSection, "bus");
  if (!have_gen) fail(CaseErrc::MissingSection, "gen");
  if (!have_branch) fail(CaseErrc::MissingSection, "branch");
  return raw;
}

RawCase read_matpower_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(CaseErrc::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_matpower(buf.str());
}

std::string write_matpower(const RawCase& raw, std::string_view name) {
  std::ostringstream out;
  out << "function mpc = " << name << "\n"
      << "mpc.version = '2';\n"
      << "mpc.baseMVA = " << fmt(raw.base_mva) << ";\n\n"
      << "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\n"
      << "mpc.bus = [\n";
  for (const RawBusRow& b : raw.bus_rows) {
    out << '\t' << b.id << '\t' << b.type << '\t' << fmt(b.pd) << '\t' << fmt(b.qd) << '\t' << fmt(b.gs)
        << '\t' << fmt(b.bs) << "\t1\t" << fmt(b.vm) << '\t' << fmt(b.va) << '\t' << fmt(b.base_kv)
        << "\t1\t1.1\t0.9;\n";
  }
  out << "];\n\n%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin\nmpc.gen = [\n";
  for (const RawGenRow& g : raw.gen_rows) {
    out << '\t' << g.bus << '\t' << fmt(g.pg) << '\t' << fmt(g.qg) << "\t0\t0\t" << fmt(g.vg) << '\t'
        << fmt(raw.base_mva) << '\t' << fmt(g.status) << "\t0\t0;\n";
  }
  out << "];\n\n%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax\nmpc.branch = [\n";
  for (const RawBranchRow& br : raw.branch_rows) {
    out << '\t' << br.from << '\t' << br.to << '\t' << fmt(br.r) << '\t' << fmt(br.x) << '\t' << fmt(br.b)
        << "\t0\t0\t0\t" << fmt(br.ratio) << '\t' << fmt(br.angle) << '\t' << fmt(br.status)
        << "\t-360\t360;\n";
  }
  out << "];\n";
  return out.str();
}

NetworkModel build_network(const RawCase& raw) {
  if (!(raw.base_mva > 0)) fail(CaseErrc::InvalidValue, "baseMVA must be positive");
  const double base = raw.base_mva;

  NetworkModel net;
  net.base_mva = base;
  std::map<int, std::size_t> index_of;
  std::size_t slack_count = 0;

  for (const RawBusRow& row : raw.bus_rows) {
    if (!index_of.emplace(row.id, net.buses.size()).second) {
      fail(CaseErrc::DuplicateBusId, "bus " + std::to_string(row.id) + " appears twice");
    }
    Bus bus;
    bus.index = net.buses.size();
    bus.external_id = row.id;
    bus.kind = row.type == 3 ? BusKind::Slack : row.type == 2 ? BusKind::PV : BusKind::PQ;
    bus.p_load = row.pd / base;
    bus.q_load = row.qd / base;
    bus.g_shunt = row.gs / base;
    bus.b_shunt = row.bs / base;
    if (bus.kind == BusKind::Slack) {
      ++slack_count;
      bus.v_set = row.vm;
      bus.theta_set = row.va * kDegToRad;
      if (!(bus.v_set > 0)) fail(CaseErrc::InvalidValue, "slack Vm must be positive");
    }
    net.buses.push_back(bus);
  }
  if (slack_count == 0) fail(CaseErrc::NoSlack, "no type-3 bus");
  if (slack_count > 1) fail(CaseErrc::MultipleSlack, std::to_string(slack_count) + " type-3 buses");

  // Aggregate in-service generators per PV bus, keeping first-seen order.
  std::vector<std::size_t> pv_slot(net.buses.size(), SIZE_MAX);
  for (const RawGenRow& g : raw.gen_rows) {
    const auto it = index_of.find(g.bus);
    if (it == index_of.end()) {
      fail(CaseErrc::GenAtUnknownBus, "generator at unknown bus " + std::to_string(g.bus));
    }
    if (!(g.status > 0)) continue;
    Bus& bus = net.buses[it->second];
    switch (bus.kind) {
      case BusKind::Slack:
        // The slack source absorbs the balance; its scheduled output is unused.
        break;
      case BusKind::PQ:
        // A generator at a PQ bus is a fixed negative load.
        bus.p_load -= g.pg / base;
        bus.q_load -= g.qg / base;
        break;
      case BusKind::PV:
        if (pv_slot[bus.index] == SIZE_MAX) {
          pv_slot[bus.index] = net.pv_gens.size();
          net.pv_gens.push_back({bus.index, g.pg / base, g.vg});
        } else {
          PvGen& agg = net.pv_gens[pv_slot[bus.index]];
          if (std::abs(agg.v_set - g.vg) > kVsetAgreement) {
            fail(CaseErrc::ConflictingVset, "bus " + std::to_string(g.bus) + " has generators at " +
                                                fmt(agg.v_set) + " and " + fmt(g.vg) + " pu");
          }
          agg.p_gen += g.pg / base;
        }
        break;
    }
  }
  for (Bus& bus : net.buses) {
    if (bus.kind != BusKind::PV) continue;
    if (pv_slot[bus.index] == SIZE_MAX) {
      bus.kind = BusKind::PQ;
      bus.v_set = 1.0;
    } else {
      bus.v_set = net.pv_gens[pv_slot[bus.index]].v_set;
      if (!(bus.v_set > 0)) fail(CaseErrc::InvalidValue, "PV setpoint must be positive");
    }
  }

  for (const RawBranchRow& row : raw.branch_rows) {
    const auto f = index_of.find(row.from);
    const auto t = index_of.find(row.to);
    if (f == index_of.end() || t == index_of.end()) {
      fail(CaseErrc::BranchToUnknownBus,
           "branch " + std::to_string(row.from) + "-" + std::to_string(row.to));
    }
    if (!(row.status > 0)) continue;
    if (row.r == 0 && row.x == 0) {
      fail(CaseErrc::InvalidValue,
           "branch " + std::to_string(row.from) + "-" + std::to_string(row.to) + " has zero impedance");
    }
    Branch br;
    br.from = f->second;
    br.to = t->second;
    br.series_r = row.r;
    br.series_x = row.x;
    br.charging_b = row.b;
    br.tap = row.ratio == 0 ? 1.0 : row.ratio;
    br.shift = row.angle * kDegToRad;
    if (!(br.tap > 0)) fail(CaseErrc::InvalidValue, "tap ratio must be positive");
    net.branches.push_back(br);
  }
  return net;
}

NetworkModel apply_loading(const NetworkModel& net, double lambda) {
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw std::invalid_argument("loading factor must be >= 0");
  NetworkModel out = net;
  out.loading *= lambda;
  return out;
}

std::vector<PolyLoad> parse_poly_loads(std::string_view json_text, const NetworkModel& net) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(CaseErrc::PolyLoadFormat, e.what());
  }
  if (!doc.is_array()) fail(CaseErrc::PolyLoadFormat, "top level must be an array");

  std::vector<PolyLoad> loads;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("bus") || !entry.contains("gR") || !entry.contains("gI")) {
      fail(CaseErrc::PolyLoadFormat, "each entry needs bus, gR and gI");
    }
    const auto& gr = entry.at("gR");
    const auto& gi = entry.at("gI");
    if (!entry.at("bus").is_number_integer() || !gr.is_array() || !gi.is_array() || gr.size() != 6 ||
        gi.size() != 6) {
      fail(CaseErrc::PolyLoadFormat, "bus must be an integer id, gR and gI arrays of 6 numbers");
    }
    const int id = entry.at("bus").get<int>();
    const auto bus = std::find_if(net.buses.begin(), net.buses.end(),
                                  [id](const Bus& b) { return b.external_id == id; });
    if (bus == net.buses.end()) fail(CaseErrc::PolyLoadFormat, "unknown bus " + std::to_string(id));

    PolyLoad load;
    load.bus = bus->index;
    for (std::size_t k = 0; k < 6; ++k) {
      if (!gr[k].is_number() || !gi[k].is_number()) fail(CaseErrc::PolyLoadFormat, "non-numeric coefficient");
      load.coeffs.g_real[k] = gr[k].get<double>();
      load.coeffs.g_imag[k] = gi[k].get<double>();
      if (!std::isfinite(load.coeffs.g_real[k]) || !std::isfinite(load.coeffs.g_imag[k])) {
        fail(CaseErrc::PolyLoadFormat, "coefficients must be finite");
      }
    }
    loads.push_back(load);
  }
  return loads;
}

NetworkModel with_poly_loads(NetworkModel net, const std::filesystem::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) fail(CaseErrc::Io, "cannot open " + sidecar.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto loads = parse_poly_loads(buf.str(), net);
  net.poly_loads.insert(net.poly_loads.end(), loads.begin(), loads.end());
  return net;
}

}  // namespace ivpf
