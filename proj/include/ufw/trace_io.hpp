#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "ufw/solver.hpp"

namespace ufw {

/// Shortest decimal form that parses back to the same double ("inf", "-inf"
/// and "nan" for the specials).
std::string format_double(double v);

/// Trace file: a `k,f,G,H,step_kind,alpha,active_size` header, one CSV row
/// per recorded iteration (strictly increasing k), then a footer metadata
/// block as comment lines prefixed '#' holding one JSON object (config echo,
/// seed, termination_reason, wall_ms).
void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& rows,
                     const nlohmann::json& meta);

/// Same content as a single JSON document {"columns", "meta", "rows"}.
void write_trace_json(std::ostream& os, const std::vector<IterationRecord>& rows,
                      const nlohmann::json& meta);

struct ParsedTrace {
  std::vector<IterationRecord> rows;
  nlohmann::json meta;
};

ParsedTrace read_trace_csv(std::istream& is);

/// Canonical row serialization used for bit-identity comparisons of two
/// solves (the volatile wall-clock footer field is not part of it).
std::string trace_rows_digest(const std::vector<IterationRecord>& rows);

}  // namespace ufw
