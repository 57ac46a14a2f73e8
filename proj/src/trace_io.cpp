#include "ufw/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ufw {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("trace: bad number '" + s + "'");
  return v;
}

void append_row(std::string& out, const IterationRecord& r) {
  out += std::to_string(r.k);
  out += ',';
  out += format_double(r.f_val);
  out += ',';
  out += format_double(r.G);
  out += ',';
  out += format_double(r.H);
  out += ',';
  out += to_string(r.step_kind);
  out += ',';
  out += format_double(r.alpha);
  out += ',';
  out += std::to_string(r.active_size);
  out += '\n';
}

}  // namespace

void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& rows,
                     const nlohmann::json& meta) {
  os << "k,f,G,H,step_kind,alpha,active_size\n";
  std::string line;
  for (const auto& r : rows) {
    line.clear();
    append_row(line, r);
    os << line;
  }
  os << "# " << meta.dump() << "\n";
}

void write_trace_json(std::ostream& os, const std::vector<IterationRecord>& rows,
                      const nlohmann::json& meta) {
  nlohmann::json doc;
  doc["columns"] = {"k", "f", "G", "H", "step_kind", "alpha", "active_size"};
  doc["meta"] = meta;
  auto& out = doc["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({r.k, r.f_val, r.G, r.H, to_string(r.step_kind), r.alpha, r.active_size});
  }
  os << doc.dump(1) << "\n";
}

ParsedTrace read_trace_csv(std::istream& is) {
  ParsedTrace out;
  std::string line;
  if (!std::getline(is, line) || line != "k,f,G,H,step_kind,alpha,active_size")
    throw std::runtime_error("trace: missing or malformed header");
  std::string meta_text;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      meta_text += line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw std::runtime_error("trace: row with wrong column count");
    IterationRecord r;
    r.k = std::stol(cells[0]);
    r.f_val = parse_double(cells[1]);
    r.G = parse_double(cells[2]);
    r.H = parse_double(cells[3]);
    r.step_kind = step_kind_from_string(cells[4]);
    r.alpha = parse_double(cells[5]);
    r.active_size = std::stoi(cells[6]);
    if (!out.rows.empty() && r.k <= out.rows.back().k)
      throw std::runtime_error("trace: iteration indices are not strictly increasing");
    out.rows.push_back(r);
  }
  if (!meta_text.empty()) out.meta = nlohmann::json::parse(meta_text);
  return out;
}

std::string trace_rows_digest(const std::vector<IterationRecord>& rows) {
  std::string out;
  out.reserve(rows.size() * 64);
  for (const auto& r : rows) append_row(out, r);
  return out;
}

}  // namespace ufw
