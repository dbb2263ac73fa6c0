#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "expert_spread/bounds.hpp"
#include "expert_spread/config.hpp"
#include "expert_spread/discretize.hpp"
#include "expert_spread/search.hpp"
#include "expert_spread/transforms.hpp"

namespace expert_spread {

using Json = nlohmann::ordered_json;

/// Malformed or unreadable input file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Rational rational_from_json(const Json& j, const std::string& what);

/// 1-based indices, reduced rationals, cells sorted by (col, row), empty cells omitted.
Json config_to_json(const Configuration& cfg);
Configuration config_from_json(const Json& j);
std::string dump_config(const Configuration& cfg);

Json raw_space_to_json(const RawSpace& space);
RawSpace raw_space_from_json(const Json& j);

/// Cell params are written 1-based.
Json trace_to_json(const TransformTrace& t);
std::string dump_trace_jsonl(const std::vector<TransformTrace>& trace);

Json bound_report_to_json(const BoundReport& r);
Json search_result_to_json(const SearchResult& r);

/// "-" reads standard input.
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);
Json parse_json(const std::string& text, const std::string& source);

}  // namespace expert_spread
